use serde::{Deserialize, Serialize};

use super::model::grid_pass;
use super::{ModelConsistency, PipelineError};
use crate::checks::{classify_with, CheckConfig, Classification, ConditionReport, Implication};
use crate::models::HvModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub model: String,
    pub classification: Classification,
    pub consistency: ModelConsistency,
    pub report: ConditionReport,
}

impl ClassificationRow {
    /// Step I, step II in both modes and step III all agree with QM.
    pub fn qm_consistent(&self) -> [bool; 4] {
        let c = &self.consistency;
        [
            c.step1.consistent,
            c.step2_bayes.consistent,
            c.step2_frozen.consistent,
            c.step3.consistent,
        ]
    }
}

/// A failed implication, kept as an explicit counterexample cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub model: String,
    pub implication: Implication,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassificationTable {
    pub rows: Vec<ClassificationRow>,
    pub counterexamples: Vec<Counterexample>,
}

impl ClassificationTable {
    pub fn implications_hold(&self) -> bool {
        self.counterexamples.is_empty()
    }

    /// No implication failures and no inconsistent model report.
    pub fn is_consistent(&self) -> bool {
        self.implications_hold() && self.rows.iter().all(|r| r.report.is_consistent())
    }

    pub fn row(&self, model: &str) -> Option<&ClassificationRow> {
        self.rows.iter().find(|r| r.model == model)
    }
}

pub fn build_classification_table(
    models: &[HvModel],
    config: &CheckConfig,
) -> Result<ClassificationTable, PipelineError> {
    let mut table = ClassificationTable::default();
    for model in models {
        let (ensemble, consistency) = grid_pass(model, config)?;
        let report = classify_with(model, config, &ensemble)?;
        for implication in report.implications.iter().filter(|i| !i.holds) {
            table.counterexamples.push(Counterexample {
                model: report.model.clone(),
                implication: implication.clone(),
            });
        }
        table.rows.push(ClassificationRow {
            model: report.model.clone(),
            classification: report.classification,
            consistency,
            report,
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_match_fresh_checks() {
        let models = [crate::models::pi_violating_oi_respecting()];
        let config = CheckConfig::default();
        let t = build_classification_table(&models, &config).unwrap();
        let fresh = crate::checks::classify_model(&models[0], &config).unwrap();
        assert_eq!(t.rows[0].report, fresh);
        assert_eq!(
            t.rows[0].consistency,
            super::super::model_consistency(&models[0], &config).unwrap()
        );
    }

    #[test]
    fn empty_model_list() {
        let t = build_classification_table(&[], &CheckConfig::default()).unwrap();
        assert!(t.rows.is_empty() && t.is_consistent());
    }

    #[test]
    fn finite_zoo_rows() {
        let models = [
            crate::models::oi_violating_qm(),
            crate::models::pi_violating_oi_respecting(),
        ];
        let t = build_classification_table(&models, &CheckConfig::default()).unwrap();
        assert!(t.is_consistent());
        assert_eq!(t.rows[0].qm_consistent(), [true; 4]);
        let pi = t.row("pi-violating").unwrap();
        assert_eq!(pi.qm_consistent(), [true, true, false, true]);
    }
}

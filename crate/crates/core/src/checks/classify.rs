use serde::{Deserialize, Serialize};

use super::chsh::scan_from_joints;
use super::{CheckConfig, CheckError, ChshScan, Condition, ConditionVerdict, GridEnsemble, LambdaTable, Level};
use crate::models::{HvModel, ModelFlags};

/// Pass/fail summary of a model's verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub parameter_independence: bool,
    pub outcome_independence: bool,
    pub factorizability: bool,
    pub local_causality: bool,
    pub no_signalling: bool,
    pub separability_per_lambda: bool,
    pub separability_ensemble: bool,
    /// Every probed per-λ joint has entries in `{0, 1}`.
    pub deterministic: bool,
}

/// One logical relation between verdicts, evaluated for a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Implication {
    pub name: String,
    pub statement: String,
    pub antecedent: bool,
    pub consequent: bool,
    pub holds: bool,
}

impl Implication {
    fn new(name: &str, statement: &str, antecedent: bool, consequent: bool) -> Self {
        Implication {
            name: name.to_string(),
            statement: statement.to_string(),
            antecedent,
            consequent,
            holds: !antecedent || consequent,
        }
    }
}

/// All verdicts for one model, the implications they must satisfy and any
/// inconsistency found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub model: String,
    pub flags: ModelFlags,
    pub verdicts: Vec<ConditionVerdict>,
    pub classification: Classification,
    pub implications: Vec<Implication>,
    /// Maximum `|S|` over the quadruples available on the grid.
    pub chsh: ChshScan,
    pub errors: Vec<String>,
}

impl ConditionReport {
    pub fn is_consistent(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn verdict(&self, condition: Condition, level: Level) -> Option<&ConditionVerdict> {
        self.verdicts
            .iter()
            .find(|v| v.condition == condition && v.level == level)
    }
}

/// The implications between per-λ conditions, checked for one classification.
pub fn implications(c: &Classification) -> Vec<Implication> {
    let (pi, oi, sep) = (
        c.parameter_independence,
        c.outcome_independence,
        c.separability_per_lambda,
    );
    vec![
        Implication::new("pi_and_oi_separable", "PI ∧ OI ⇒ separable per λ", pi && oi, sep),
        Implication::new("not_pi_and_oi_separable", "¬PI ∧ OI ⇒ separable per λ", !pi && oi, sep),
        Implication::new("not_oi_not_separable", "¬OI ⇒ not separable per λ", !oi, !sep),
    ]
}

/// Runs every checker on `model` over `config.grid`.
pub fn classify_model(model: &HvModel, config: &CheckConfig) -> Result<ConditionReport, CheckError> {
    classify_with(model, config, &GridEnsemble::compute(model, &config.grid)?)
}

/// [`classify_model`] with ensemble statistics already computed on
/// `config.grid`.
pub fn classify_with(
    model: &HvModel,
    config: &CheckConfig,
    ensemble: &GridEnsemble,
) -> Result<ConditionReport, CheckError> {
    if ensemble.grid != config.grid {
        return Err(CheckError::Settings(
            "ensemble statistics were computed on a different grid".into(),
        ));
    }
    let table = LambdaTable::build(model, &config.grid, config.lambda_probe)?;
    let tol = config.tolerance;
    let verdicts = vec![
        table.parameter_independence(tol),
        table.outcome_independence(tol),
        table.factorizability(tol),
        table.local_causality(tol),
        ensemble.no_signalling(config),
        table.separability(tol),
        ensemble.separability(config),
    ];
    let pass = |c: Condition, l: Level| {
        verdicts
            .iter()
            .find(|v| v.condition == c && v.level == l)
            .is_some_and(|v| v.pass)
    };
    let probed = table.joints.iter().map(Vec::len).sum::<usize>();
    let classification = Classification {
        parameter_independence: pass(Condition::ParameterIndependence, Level::PerLambda),
        outcome_independence: pass(Condition::OutcomeIndependence, Level::PerLambda),
        factorizability: pass(Condition::Factorizability, Level::PerLambda),
        local_causality: pass(Condition::LocalCausality, Level::PerLambda),
        no_signalling: pass(Condition::NoSignalling, Level::Ensemble),
        separability_per_lambda: pass(Condition::Separability, Level::PerLambda),
        separability_ensemble: pass(Condition::Separability, Level::Ensemble),
        deterministic: probed > 0 && table.deterministic_count() == probed,
    };
    let implications = implications(&classification);
    let chsh = scan_from_joints(&config.grid, &ensemble.joints, config)?;

    let c = &classification;
    let mut errors = Vec::new();
    for i in implications.iter().filter(|i| !i.holds) {
        errors.push(format!("implication failed: {}", i.statement));
    }
    if c.factorizability != (c.parameter_independence && c.outcome_independence) {
        errors.push("factorizability differs from PI ∧ OI".to_string());
    }
    if c.local_causality != c.factorizability {
        errors.push("local causality differs from factorizability".to_string());
    }
    if c.outcome_independence != c.separability_per_lambda {
        errors.push("per-λ OI differs from per-λ zero covariance".to_string());
    }
    if c.deterministic && !c.outcome_independence {
        errors.push("deterministic model fails OI".to_string());
    }
    if c.factorizability && !chsh.within_classical() {
        errors.push(format!(
            "factorizable model exceeds the CHSH bound: |S| = {}",
            chsh.max_abs_s
        ));
    }
    let flags = model.flags();
    if flags.claims_pi != c.parameter_independence {
        errors.push(format!(
            "model claims PI = {} but the check gives {}",
            flags.claims_pi, c.parameter_independence
        ));
    }
    if flags.claims_oi != c.outcome_independence {
        errors.push(format!(
            "model claims OI = {} but the check gives {}",
            flags.claims_oi, c.outcome_independence
        ));
    }
    if flags.deterministic && !c.deterministic {
        errors.push("model claims determinism but has stochastic per-λ joints".to_string());
    }

    Ok(ConditionReport {
        model: model.name().to_string(),
        flags,
        verdicts,
        classification,
        implications,
        chsh,
        errors,
    })
}

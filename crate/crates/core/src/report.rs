//! Versioned JSON envelopes and flat CSV tables.
//!
//! Every CSV row starts with the columns in [`META_COLUMNS`], so a single
//! file is enough to replay a run. The remaining columns are fixed per
//! table and listed by the `*_COLUMNS` constants.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checks::{CheckConfig, ChshResult, Condition, ConditionReport, Level};
use crate::contextuality::{ContextualityReport, EnumerationReport};
use crate::pipeline::{ClassificationRow, PipelineReport, ScanPoint, Status, StepReport};
use crate::tolerance;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "eprb";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub exact: f64,
    pub zero_probability: f64,
    pub analytic: f64,
    pub sigma: f64,
    pub quadrature_limit: f64,
}

impl Tolerances {
    pub fn from_config(config: &CheckConfig) -> Self {
        Tolerances {
            exact: tolerance::EXACT,
            zero_probability: tolerance::ZERO_PROBABILITY,
            analytic: config.tolerance,
            sigma: config.sigma,
            quadrature_limit: tolerance::QUADRATURE_LIMIT,
        }
    }
}

/// Grid as typed on the command line plus its size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub spec: String,
    pub pairs: usize,
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub samples: usize,
    pub grid: GridSummary,
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<String>,
}

impl ReportMeta {
    pub fn new(command: &str, seed: u64, samples: usize, grid_spec: &str, config: &CheckConfig) -> Self {
        ReportMeta {
            schema_version: SCHEMA_VERSION,
            tool: TOOL_NAME.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            seed,
            samples,
            grid: GridSummary {
                spec: grid_spec.to_string(),
                pairs: config.grid.len(),
            },
            tolerances: Tolerances::from_config(config),
            conditioning: None,
        }
    }

    pub fn with_conditioning(mut self, mode: impl ToString) -> Self {
        self.conditioning = Some(mode.to_string());
        self
    }

    fn csv_values(&self) -> Vec<String> {
        vec![
            self.schema_version.to_string(),
            self.tool_version.clone(),
            self.command.clone(),
            self.seed.to_string(),
            self.samples.to_string(),
            self.grid.spec.clone(),
            self.tolerances.exact.to_string(),
            self.tolerances.analytic.to_string(),
            self.tolerances.sigma.to_string(),
            self.conditioning.clone().unwrap_or_default(),
        ]
    }
}

pub const META_COLUMNS: [&str; 10] = [
    "schema_version",
    "tool_version",
    "command",
    "seed",
    "samples",
    "grid",
    "tol_exact",
    "tol_analytic",
    "sigma",
    "conditioning",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    #[serde(flatten)]
    pub meta: ReportMeta,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(meta: ReportMeta, result: T) -> Self {
        Envelope { meta, result }
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<(), ReportError> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_json()?.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

/// A fixed-column table; `write` prepends [`META_COLUMNS`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &'static [&'static str]) -> Self {
        CsvTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, meta: &ReportMeta, writer: W) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<&str> = META_COLUMNS.iter().chain(self.columns).copied().collect();
        w.write_record(&header)?;
        let prefix = meta.csv_values();
        for row in &self.rows {
            w.write_record(prefix.iter().chain(row))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_string(&self, meta: &ReportMeta) -> Result<String, ReportError> {
        let mut buf = Vec::new();
        self.write(meta, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn write_file(&self, meta: &ReportMeta, path: &Path) -> Result<(), ReportError> {
        self.write(meta, std::fs::File::create(path)?)
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn status(s: Status) -> &'static str {
    match s {
        Status::NotApplicable => "n/a",
        Status::Satisfied => "satisfied",
        Status::Violated => "violated",
    }
}

fn sign(o: Option<crate::quantum::Outcome>) -> String {
    o.map(|o| if o.sign() > 0 { "+1" } else { "-1" }.to_string())
        .unwrap_or_default()
}

pub const STEP_COLUMNS: [&str; 17] = [
    "step",
    "a_deg",
    "b_deg",
    "outcome_a",
    "outcome_b",
    "p_pp",
    "p_pm",
    "p_mp",
    "p_mm",
    "mean_a",
    "mean_b",
    "joint_expectation",
    "covariance",
    "separable",
    "parameter_independence",
    "outcome_independence",
    "deterministic_entries",
];

pub fn step_row(r: &StepReport) -> Vec<String> {
    let p = r.quantities.joint.table();
    let mut row = vec![
        format!("{:?}", r.step),
        num(r.inputs.a.degrees()),
        num(r.inputs.b.degrees()),
        sign(r.inputs.outcome_a),
        sign(r.inputs.outcome_b),
    ];
    row.extend([p[0][0], p[0][1], p[1][0], p[1][1]].map(num));
    row.extend(
        [
            r.quantities.mean_a,
            r.quantities.mean_b,
            r.quantities.joint_expectation,
            r.quantities.covariance,
        ]
        .map(num),
    );
    row.push(r.flags.separable.to_string());
    row.push(status(r.flags.parameter_independence).to_string());
    row.push(status(r.flags.outcome_independence).to_string());
    row.push(r.deterministic_entries.to_string());
    row
}

pub fn pipeline_table(report: &PipelineReport) -> CsvTable {
    let mut t = CsvTable::new(&STEP_COLUMNS);
    for step in &report.steps {
        t.push(step_row(step));
    }
    t
}

pub const CONDITION_COLUMNS: [&str; 8] = [
    "model",
    "condition",
    "level",
    "pass",
    "max_violation",
    "tolerance",
    "evaluated",
    "skipped",
];

fn condition_rows(t: &mut CsvTable, report: &ConditionReport) {
    for v in &report.verdicts {
        t.push(vec![
            report.model.clone(),
            v.condition.to_string(),
            format!("{:?}", v.level).to_lowercase(),
            v.pass.to_string(),
            num(v.max_violation),
            num(v.tolerance),
            v.evaluated.to_string(),
            v.skipped.to_string(),
        ]);
    }
    t.push(vec![
        report.model.clone(),
        "chsh".into(),
        "ensemble".into(),
        report.chsh.within_classical().to_string(),
        num(report.chsh.max_abs_s),
        num(crate::checks::CLASSICAL_BOUND),
        report.chsh.quadruples.to_string(),
        "0".into(),
    ]);
}

pub fn condition_table(reports: &[&ConditionReport]) -> CsvTable {
    let mut t = CsvTable::new(&CONDITION_COLUMNS);
    for r in reports {
        condition_rows(&mut t, r);
    }
    t
}

pub const CLASSIFICATION_COLUMNS: [&str; 16] = [
    "model",
    "parameter_independence",
    "outcome_independence",
    "factorizability",
    "local_causality",
    "no_signalling",
    "separability_per_lambda",
    "separability_ensemble",
    "deterministic",
    "chsh_max_abs_s",
    "qm_step1",
    "qm_step2_bayes",
    "qm_step2_frozen",
    "qm_step3",
    "implications_hold",
    "consistent",
];

pub fn classification_table(rows: &[ClassificationRow]) -> CsvTable {
    let mut t = CsvTable::new(&CLASSIFICATION_COLUMNS);
    for r in rows {
        let c = &r.classification;
        let mut row = vec![r.model.clone()];
        row.extend(
            [
                c.parameter_independence,
                c.outcome_independence,
                c.factorizability,
                c.local_causality,
                c.no_signalling,
                c.separability_per_lambda,
                c.separability_ensemble,
                c.deterministic,
            ]
            .map(|b| b.to_string()),
        );
        row.push(num(r.report.chsh.max_abs_s));
        row.extend(r.qm_consistent().map(|b| b.to_string()));
        row.push(r.report.implications.iter().all(|i| i.holds).to_string());
        row.push(r.report.is_consistent().to_string());
        t.push(row);
    }
    t
}

pub const CHSH_COLUMNS: [&str; 15] = [
    "target",
    "a_deg",
    "a_prime_deg",
    "b_deg",
    "b_prime_deg",
    "e_ab",
    "e_ab_prime",
    "e_a_prime_b",
    "e_a_prime_b_prime",
    "s",
    "abs_s",
    "std_error",
    "band",
    "within_classical",
    "within_quantum",
];

pub fn chsh_row(target: &str, r: &ChshResult) -> Vec<String> {
    let mut row = vec![target.to_string()];
    row.extend(r.settings.map(|s| num(s.degrees())));
    row.extend(r.correlators.map(num));
    row.extend([r.s, r.abs_s, r.std_error, r.band].map(num));
    row.push(r.within_classical.to_string());
    row.push(r.within_quantum.to_string());
    row
}

pub const ENUMERATION_COLUMNS: [&str; 5] = ["enumeration", "preparation_mode", "total", "satisfying", "witnesses"];

fn enumeration_row(r: &EnumerationReport) -> Vec<String> {
    vec![
        r.enumeration.to_string(),
        r.preparation_mode.map(|m| m.to_string()).unwrap_or_default(),
        r.total.to_string(),
        r.satisfying.to_string(),
        r.witnesses.len().to_string(),
    ]
}

pub fn enumeration_table(reports: &[&EnumerationReport]) -> CsvTable {
    let mut t = CsvTable::new(&ENUMERATION_COLUMNS);
    for r in reports {
        t.push(enumeration_row(r));
    }
    t
}

pub fn contextuality_table(report: &ContextualityReport) -> CsvTable {
    enumeration_table(&report.enumerations())
}

pub const SCAN_COLUMNS: [&str; 10] = [
    "theta_deg",
    "qm_correlation",
    "qm_covariance",
    "qm_conditioned",
    "model_correlation",
    "model_correlation_error",
    "model_bayes",
    "model_bayes_error",
    "model_frozen",
    "model_frozen_error",
];

pub fn scan_table(points: &[ScanPoint]) -> CsvTable {
    let mut t = CsvTable::new(&SCAN_COLUMNS);
    for p in points {
        let mut row = vec![
            num(p.theta_degrees),
            num(p.quantum_correlation),
            num(p.quantum_covariance),
            num(p.quantum_conditioned),
        ];
        match &p.model {
            Some(m) => row.extend(
                [
                    m.correlation,
                    m.correlation_error,
                    m.bayes,
                    m.bayes_error,
                    m.frozen,
                    m.frozen_error,
                ]
                .map(num),
            ),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        t.push(row);
    }
    t
}

/// Verdict of `condition` at `level`, or `None` when absent.
pub fn verdict_pass(report: &ConditionReport, condition: Condition, level: Level) -> Option<bool> {
    report.verdict(condition, level).map(|v| v.pass)
}

//! Mechanical verdicts on the locality-adjacent conditions.
//!
//! Per-λ conditions (parameter independence, outcome independence,
//! factorizability, local causality, per-λ separability) are exact for every
//! model: they evaluate `P(A, B | a, b, λ)` at probe points of the λ-space.
//! Ensemble conditions (no-signalling, ensemble separability, CHSH) inherit
//! the model's integration error and use a `σ`-band when it is Monte Carlo.

mod chsh;
mod classify;
mod ensemble;
mod local;

use serde::{Deserialize, Serialize};

pub use crate::grid::{GridError, SettingsGrid};
pub use chsh::{
    chsh_scan, chsh_scan_grid, chsh_value, standard_quadruple, ChshResult, ChshScan, CLASSICAL_BOUND, TSIRELSON_BOUND,
};
pub use classify::{classify_model, classify_with, implications, Classification, ConditionReport, Implication};
pub use ensemble::{
    check_no_signalling, check_separability, conditioned_marginal_dependence, ConditionedDependence, GridEnsemble,
};
pub use local::{
    check_factorizability, check_local_causality, check_outcome_independence, check_parameter_independence, LambdaTable,
};

use crate::models::{HvModel, Lambda, ModelError};
use crate::quantum::{Outcome, Particle, QuantumError, QuantumState, Setting};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("{0} cannot be evaluated at the {1:?} level for this target")]
    Unsupported(Condition, Level),
}

/// Grid and tolerances used by every checker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub grid: SettingsGrid,
    /// Absolute tolerance for exact claims.
    pub tolerance: f64,
    /// Width of the Monte Carlo acceptance band in standard errors.
    pub sigma: f64,
    /// Number of sphere samples inspected by per-λ checks.
    pub lambda_probe: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            grid: SettingsGrid::default(),
            tolerance: tolerance::ANALYTIC,
            sigma: tolerance::SIGMA,
            lambda_probe: 2048,
        }
    }
}

impl CheckConfig {
    pub fn with_grid(mut self, grid: SettingsGrid) -> Self {
        self.grid = grid;
        self
    }

    /// Acceptance threshold for a quantity with integration error `error`.
    pub fn threshold(&self, error: f64) -> f64 {
        self.tolerance.max(self.sigma * error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    ParameterIndependence,
    OutcomeIndependence,
    Factorizability,
    LocalCausality,
    NoSignalling,
    Separability,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Condition::ParameterIndependence => "parameter-independence",
            Condition::OutcomeIndependence => "outcome-independence",
            Condition::Factorizability => "factorizability",
            Condition::LocalCausality => "local-causality",
            Condition::NoSignalling => "no-signalling",
            Condition::Separability => "separability",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    PerLambda,
    Ensemble,
}

/// Everything needed to replay a violating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub a: Setting,
    pub b: Setting,
    /// The setting compared against, for checks that vary one side.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternate: Option<Setting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particle: Option<Particle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Lambda>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome_a: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome_b: Option<Outcome>,
}

impl Witness {
    pub(crate) fn at(a: Setting, b: Setting) -> Self {
        Witness {
            a,
            b,
            alternate: None,
            particle: None,
            lambda: None,
            outcome_a: None,
            outcome_b: None,
        }
    }
}

/// One condition, one level. `pass` is false exactly when
/// `max_violation > tolerance`, and a failing verdict always has a witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub condition: Condition,
    pub level: Level,
    pub pass: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
    /// Grid points (times λ probes) evaluated.
    pub evaluated: usize,
    /// Conditionings skipped because the conditioning outcome had
    /// probability below the zero threshold.
    pub skipped: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Running maximum of a violation magnitude with its witness.
#[derive(Debug, Clone, Default)]
pub(crate) struct Tracker {
    max: f64,
    witness: Option<Witness>,
    evaluated: usize,
    skipped: usize,
}

impl Tracker {
    pub(crate) fn observe(&mut self, violation: f64, witness: impl FnOnce() -> Witness) {
        self.evaluated += 1;
        if violation > self.max {
            self.max = violation;
            self.witness = Some(witness());
        }
    }

    pub(crate) fn skip(&mut self) {
        self.skipped += 1;
    }

    pub(crate) fn verdict(self, condition: Condition, level: Level, tolerance: f64) -> ConditionVerdict {
        let pass = self.max <= tolerance;
        ConditionVerdict {
            condition,
            level,
            pass,
            max_violation: self.max,
            tolerance,
            witness: self.witness,
            evaluated: self.evaluated,
            skipped: self.skipped,
            notes: Vec::new(),
        }
    }
}

/// What a checker is pointed at.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    State(&'a QuantumState),
    Model(&'a HvModel),
}

impl<'a> From<&'a QuantumState> for Target<'a> {
    fn from(s: &'a QuantumState) -> Self {
        Target::State(s)
    }
}

impl<'a> From<&'a HvModel> for Target<'a> {
    fn from(m: &'a HvModel) -> Self {
        Target::Model(m)
    }
}

//! Hidden-variable models.
//!
//! A model is a λ-space with a weight `ρ(λ)` and a per-λ joint distribution
//! `P(A, B | a, b, λ)`. The weight never sees the settings, so measurement
//! independence holds for every model that can be expressed here.

mod lambda;
mod posterior;
mod table;
mod zoo;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use lambda::{ErrorKind, Estimate, Lambda, LambdaSpace, WeightFn};
pub use posterior::{posterior_lambda, ConditionedMean, ConditioningMode, PosteriorLambda};
pub use table::{load_table_model, parse_table_model, TableEntry, TableModelSpec, TABLE_SCHEMA_VERSION};
pub use zoo::{
    bell_local_deterministic, by_name, factorizable_stochastic, oi_violating_qm, pi_violating_oi_respecting, zoo,
    ZOO_NAMES,
};

use crate::quantum::{JointDistribution, Outcome, QuantumError, Setting};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid λ-space: {0}")]
    InvalidSpace(String),
    #[error("quadrature did not converge: error estimate {estimate:e} exceeds {limit:e} with {nodes} nodes")]
    Integration { estimate: f64, limit: f64, nodes: usize },
    #[error("cannot condition on outcome {outcome} with ensemble probability {probability:e}")]
    Conditioning { outcome: Outcome, probability: f64 },
    #[error("settings ({}, {}) are not on the model's declared grid", pair.0, pair.1)]
    OffGrid { pair: Box<(Setting, Setting)> },
    #[error("model {model}: {source}")]
    Distribution {
        model: String,
        #[source]
        source: QuantumError,
    },
    #[error("unknown model {0:?}; known models: {known}", known = ZOO_NAMES.join(", "))]
    UnknownModel(String),
    #[error("invalid model file: {0}")]
    Schema(String),
    #[error("cannot read model file: {0}")]
    Io(String),
}

/// Properties a model claims about itself. The checkers verify them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFlags {
    pub deterministic: bool,
    pub claims_pi: bool,
    pub claims_oi: bool,
}

pub type JointKernel = Arc<dyn Fn(&Setting, &Setting, &Lambda) -> Result<JointDistribution, ModelError> + Send + Sync>;

/// A hidden-variable model. Cheap to clone; immutable after construction.
#[derive(Clone)]
pub struct HvModel {
    name: String,
    lambda_space: LambdaSpace,
    kernel: JointKernel,
    flags: ModelFlags,
    declared_settings: Option<(Vec<Setting>, Vec<Setting>)>,
}

impl fmt::Debug for HvModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HvModel")
            .field("name", &self.name)
            .field("lambda_space", &self.lambda_space)
            .field("flags", &self.flags)
            .finish_non_exhaustive()
    }
}

/// Ensemble joint distribution with its integration error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleJoint {
    pub distribution: JointDistribution,
    /// Per-entry error: standard error for Monte Carlo, quadrature error
    /// estimate for intervals, zero for finite spaces.
    pub error: [[f64; 2]; 2],
    pub correlation: f64,
    pub correlation_error: f64,
    pub kind: ErrorKind,
}

impl HvModel {
    pub fn new<F>(name: impl Into<String>, lambda_space: LambdaSpace, flags: ModelFlags, kernel: F) -> Self
    where
        F: Fn(&Setting, &Setting, &Lambda) -> Result<JointDistribution, ModelError> + Send + Sync + 'static,
    {
        HvModel {
            name: name.into(),
            lambda_space,
            kernel: Arc::new(kernel),
            flags,
            declared_settings: None,
        }
    }

    /// Restricts the model to a declared set of `a` and `b` settings.
    pub fn with_declared_settings(mut self, a: Vec<Setting>, b: Vec<Setting>) -> Self {
        self.declared_settings = Some((a, b));
        self
    }

    /// Replaces Monte Carlo parameters; no effect on other λ-spaces.
    pub fn with_sampling(mut self, samples: usize, seed: u64) -> Self {
        if let LambdaSpace::Sphere { .. } = self.lambda_space {
            self.lambda_space = LambdaSpace::Sphere {
                samples: samples.max(1),
                seed,
            };
        }
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lambda_space(&self) -> &LambdaSpace {
        &self.lambda_space
    }

    pub fn flags(&self) -> ModelFlags {
        self.flags
    }

    pub fn declared_settings(&self) -> Option<&(Vec<Setting>, Vec<Setting>)> {
        self.declared_settings.as_ref()
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self.lambda_space, LambdaSpace::Sphere { .. })
    }

    /// `P(A, B | a, b, λ)`, checked for normalisation.
    pub fn joint_at(&self, a: &Setting, b: &Setting, lambda: &Lambda) -> Result<JointDistribution, ModelError> {
        let d = (self.kernel)(a, b, lambda)?;
        d.validate(tolerance::EXACT)
            .map_err(|source| ModelError::Distribution {
                model: self.name.clone(),
                source,
            })?;
        Ok(d)
    }

    /// `∫ ρ(λ) P(A, B | a, b, λ) dλ`.
    pub fn ensemble_joint(&self, a: &Setting, b: &Setting) -> Result<EnsembleJoint, ModelError> {
        Ok(self.ensemble_many(&[(*a, *b)])?.remove(0))
    }

    /// Ensemble joints for many setting pairs from one pass over λ, so Monte
    /// Carlo estimates share their samples.
    pub fn ensemble_many(&self, pairs: &[(Setting, Setting)]) -> Result<Vec<EnsembleJoint>, ModelError> {
        const PER_PAIR: usize = 5;
        let est = self.lambda_space.integrate(pairs.len() * PER_PAIR, |lambda, out| {
            for (k, (a, b)) in pairs.iter().enumerate() {
                let d = self.joint_at(a, b, lambda)?;
                let t = d.table();
                let slot = &mut out[k * PER_PAIR..(k + 1) * PER_PAIR];
                slot[0] = t[0][0];
                slot[1] = t[0][1];
                slot[2] = t[1][0];
                slot[3] = t[1][1];
                slot[4] = d.correlation();
            }
            Ok(())
        })?;
        Ok((0..pairs.len())
            .map(|k| {
                let m = &est.mean[k * PER_PAIR..(k + 1) * PER_PAIR];
                let e = &est.error[k * PER_PAIR..(k + 1) * PER_PAIR];
                EnsembleJoint {
                    distribution: JointDistribution::from_raw([[m[0], m[1]], [m[2], m[3]]]),
                    error: [[e[0], e[1]], [e[2], e[3]]],
                    correlation: m[4],
                    correlation_error: e[4],
                    kind: est.kind,
                }
            })
            .collect())
    }
}

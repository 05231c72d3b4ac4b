use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ErrorKind, Estimate, HvModel, Lambda, ModelError};
use crate::quantum::{Outcome, Setting};
use crate::tolerance;

/// How `ρ(λ)` is treated once the first particle has produced `A′`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditioningMode {
    /// `ρ(λ | A′) ∝ ρ(λ) P(A′ | a, b, λ)`.
    Bayes,
    /// `ρ(λ)` unchanged.
    Frozen,
}

impl ConditioningMode {
    pub const BOTH: [ConditioningMode; 2] = [ConditioningMode::Bayes, ConditioningMode::Frozen];
}

impl fmt::Display for ConditioningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditioningMode::Bayes => "bayes",
            ConditioningMode::Frozen => "frozen",
        })
    }
}

impl FromStr for ConditioningMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bayes" => Ok(ConditioningMode::Bayes),
            "frozen" => Ok(ConditioningMode::Frozen),
            other => Err(format!(
                "unknown conditioning mode {other:?} (expected bayes or frozen)"
            )),
        }
    }
}

/// The λ distribution after particle 1 gave `outcome` along `setting`.
///
/// `context` is the distant setting `b`; it matters only for models whose
/// first-particle statistics depend on it.
#[derive(Debug, Clone)]
pub struct PosteriorLambda {
    model: HvModel,
    pub setting: Setting,
    pub context: Setting,
    pub outcome: Outcome,
    pub mode: ConditioningMode,
    /// Ensemble `P(A′ | a, b)`.
    pub evidence: f64,
    pub evidence_error: f64,
    weights: Option<Vec<f64>>,
}

/// Conditioned expectation with its integration error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionedMean {
    pub value: f64,
    pub error: f64,
    pub kind: ErrorKind,
    /// Posterior weight of λ values at which `P(A′ | a, b, λ)` vanishes.
    pub degenerate_weight: f64,
}

pub fn posterior_lambda(
    model: &HvModel,
    setting: &Setting,
    context: &Setting,
    outcome: Outcome,
    mode: ConditioningMode,
) -> Result<PosteriorLambda, ModelError> {
    let likelihood = |lambda: &Lambda| -> Result<f64, ModelError> {
        Ok(model.joint_at(setting, context, lambda)?.marginal_a(outcome))
    };
    let est = model.lambda_space().integrate(1, |lambda, out| {
        out[0] = likelihood(lambda)?;
        Ok(())
    })?;
    let evidence = est.mean[0];
    if evidence < tolerance::ZERO_PROBABILITY {
        return Err(ModelError::Conditioning {
            outcome,
            probability: evidence,
        });
    }
    let weights = match (model.lambda_space(), mode) {
        (super::LambdaSpace::Finite { points, weights }, ConditioningMode::Bayes) => Some(
            points
                .iter()
                .zip(weights)
                .map(|(l, w)| Ok(w * likelihood(l)? / evidence))
                .collect::<Result<Vec<_>, ModelError>>()?,
        ),
        (super::LambdaSpace::Finite { weights, .. }, ConditioningMode::Frozen) => Some(weights.clone()),
        _ => None,
    };
    Ok(PosteriorLambda {
        model: model.clone(),
        setting: *setting,
        context: *context,
        outcome,
        mode,
        evidence,
        evidence_error: est.error[0],
        weights,
    })
}

impl PosteriorLambda {
    pub fn model_name(&self) -> &str {
        self.model.name()
    }

    /// Posterior weights, for finite λ-spaces.
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    fn likelihood(&self, lambda: &Lambda) -> Result<f64, ModelError> {
        Ok(self
            .model
            .joint_at(&self.setting, &self.context, lambda)?
            .marginal_a(self.outcome))
    }

    /// `∫ ρ(λ | A′) f(λ) dλ`. Bayes mode uses the self-normalised ratio
    /// estimator; Monte Carlo errors come from its linearised variance.
    pub fn integrate<F>(&self, outputs: usize, f: F) -> Result<Estimate, ModelError>
    where
        F: Fn(&Lambda, &mut [f64]) -> Result<(), ModelError> + Sync,
    {
        let space = self.model.lambda_space();
        if self.mode == ConditioningMode::Frozen {
            return space.integrate(outputs, f);
        }
        let weighted = space.integrate(outputs + 1, |lambda, out| {
            let w = self.likelihood(lambda)?;
            f(lambda, &mut out[1..])?;
            out[0] = w;
            for v in &mut out[1..] {
                *v *= w;
            }
            Ok(())
        })?;
        let norm = weighted.mean[0];
        let ratio: Vec<f64> = weighted.mean[1..].iter().map(|m| m / norm).collect();
        let error = match weighted.kind {
            ErrorKind::Exact => vec![0.0; outputs],
            ErrorKind::Quadrature => weighted.error[1..]
                .iter()
                .zip(&ratio)
                .map(|(e, r)| (e + r.abs() * weighted.error[0]) / norm)
                .collect(),
            ErrorKind::MonteCarlo => {
                let residual = space.integrate(outputs, |lambda, out| {
                    let w = self.likelihood(lambda)?;
                    f(lambda, out)?;
                    for (v, r) in out.iter_mut().zip(&ratio) {
                        *v = w * (*v - r);
                    }
                    Ok(())
                })?;
                residual.error.iter().map(|e| e / norm).collect()
            }
        };
        Ok(Estimate {
            mean: ratio,
            error,
            kind: weighted.kind,
            evaluations: weighted.evaluations,
        })
    }

    /// Predicted `⟨σ₂_b⟩` given `A′`.
    ///
    /// Per λ the second particle's mean is conditioned on `A′` where
    /// `P(A′ | a, b, λ) > 0` and left marginal elsewhere; for factorizable
    /// models both coincide with `E⁽²⁾(b, λ)`.
    pub fn second_mean(&self, b: &Setting) -> Result<ConditionedMean, ModelError> {
        let est = self.integrate(2, |lambda, out| {
            let d = self.model.joint_at(&self.setting, b, lambda)?;
            let pa = d.marginal_a(self.outcome);
            if pa >= tolerance::ZERO_PROBABILITY {
                let row = d.table()[self.outcome.index()];
                out[0] = (row[0] - row[1]) / pa;
                out[1] = 0.0;
            } else {
                out[0] = d.mean_b();
                out[1] = 1.0;
            }
            Ok(())
        })?;
        Ok(ConditionedMean {
            value: est.mean[0],
            error: est.error[0],
            kind: est.kind,
            degenerate_weight: est.mean[1],
        })
    }
}

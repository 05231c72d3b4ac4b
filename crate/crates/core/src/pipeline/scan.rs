use serde::{Deserialize, Serialize};

use super::{conditioned_predictions, PipelineError};
use crate::models::HvModel;
use crate::quantum::{covariance, joint_probability, singlet_state, Outcome, Setting};

/// One angle of a θ sweep at fixed `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub theta_degrees: f64,
    pub quantum_correlation: f64,
    pub quantum_covariance: f64,
    /// `⟨σ₂_b⟩` after `A′`: `−A′ cos θ`.
    pub quantum_conditioned: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelScanPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelScanPoint {
    pub correlation: f64,
    pub correlation_error: f64,
    pub bayes: f64,
    pub bayes_error: f64,
    pub frozen: f64,
    pub frozen_error: f64,
}

/// Sweeps `b = a + θ` over `thetas` (degrees).
pub fn angle_scan(
    a: Setting,
    thetas: &[f64],
    outcome_a: Outcome,
    model: Option<&HvModel>,
) -> Result<Vec<ScanPoint>, PipelineError> {
    let psi = singlet_state();
    let pairs: Vec<(Setting, Setting)> = thetas
        .iter()
        .map(|t| (a, Setting::from_radians(a.angle() + t.to_radians())))
        .collect();
    let model_points = match model {
        Some(m) => {
            let joints = m.ensemble_many(&pairs)?;
            let predictions = conditioned_predictions(m, &pairs, &[outcome_a])?;
            let mut out = Vec::with_capacity(pairs.len());
            for ((a, b), j) in pairs.iter().zip(&joints) {
                let p = predictions.iter().find(|p| p.a == *a && p.b == *b);
                out.push(Some(ModelScanPoint {
                    correlation: j.correlation,
                    correlation_error: j.correlation_error,
                    bayes: p.map_or(f64::NAN, |p| p.bayes.value),
                    bayes_error: p.map_or(f64::NAN, |p| p.bayes.error),
                    frozen: p.map_or(f64::NAN, |p| p.frozen.value),
                    frozen_error: p.map_or(f64::NAN, |p| p.frozen.error),
                }));
            }
            out
        }
        None => vec![None; pairs.len()],
    };
    pairs
        .iter()
        .zip(thetas)
        .zip(model_points)
        .map(|(((a, b), theta), model)| {
            Ok(ScanPoint {
                theta_degrees: *theta,
                quantum_correlation: joint_probability(&psi, a, b)?.correlation(),
                quantum_covariance: covariance(&psi, a, b)?,
                quantum_conditioned: -outcome_a.value() * a.cos_to(b),
                model,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::pi_violating_oi_respecting;

    #[test]
    fn scan_matches_closed_forms() {
        let m = pi_violating_oi_respecting();
        let thetas = [0.0, 45.0, 90.0, 180.0];
        let points = angle_scan(Setting::from_degrees(10.0), &thetas, Outcome::Minus, Some(&m)).unwrap();
        for p in points {
            let c = p.theta_degrees.to_radians().cos();
            assert!((p.quantum_correlation + c).abs() < 1e-12);
            assert!((p.quantum_conditioned - c).abs() < 1e-12);
            let mp = p.model.unwrap();
            assert!((mp.correlation + c).abs() < 1e-12);
            assert!((mp.bayes - c).abs() < 1e-12);
            assert!(mp.frozen.abs() < 1e-12);
        }
    }
}

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::checks::{CheckConfig, GridEnsemble, Witness};
use crate::models::{ConditionedMean, ConditioningMode, ErrorKind, Estimate, HvModel, ModelError};
use crate::quantum::{joint_probability, singlet_state, JointDistribution, Outcome, Setting};
use crate::tolerance;

/// Model predictions for `⟨σ₂_b⟩` given `A′` at one setting pair, under both
/// conditioning modes, next to the quantum value `−A′ cos θ_ab`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionPoint {
    pub a: Setting,
    pub b: Setting,
    pub outcome_a: Outcome,
    /// Ensemble `P(A′ | a, b)`.
    pub evidence: f64,
    pub bayes: ConditionedMean,
    pub frozen: ConditionedMean,
    pub quantum: f64,
}

impl PredictionPoint {
    pub fn prediction(&self, mode: ConditioningMode) -> &ConditionedMean {
        match mode {
            ConditioningMode::Bayes => &self.bayes,
            ConditioningMode::Frozen => &self.frozen,
        }
    }
}

const PER_POINT: usize = 8;

/// Per-λ outputs for one pair: conditioned mean and the moments needed for
/// both conditioning modes.
fn fill_prediction(d: &JointDistribution, outcomes: &[Outcome], out: &mut [f64]) {
    for (j, outcome) in outcomes.iter().enumerate() {
        let w = d.marginal_a(*outcome);
        let (m, degenerate) = if w >= tolerance::ZERO_PROBABILITY {
            let row = d.table()[outcome.index()];
            ((row[0] - row[1]) / w, 0.0)
        } else {
            (d.mean_b(), 1.0)
        };
        out[j * PER_POINT..(j + 1) * PER_POINT].copy_from_slice(&[
            m,
            degenerate,
            w,
            w * m,
            w * degenerate,
            w * w,
            (w * m) * (w * m),
            w * w * m,
        ]);
    }
}

fn assemble_predictions(pairs: &[(Setting, Setting)], outcomes: &[Outcome], est: &Estimate) -> Vec<PredictionPoint> {
    let width = outcomes.len() * PER_POINT;
    let n = est.evaluations as f64;
    let mut points = Vec::with_capacity(pairs.len() * outcomes.len());
    for (k, (a, b)) in pairs.iter().enumerate() {
        for (j, outcome) in outcomes.iter().enumerate() {
            let base = k * width + j * PER_POINT;
            let m = &est.mean[base..base + PER_POINT];
            let e = &est.error[base..base + PER_POINT];
            let norm = m[2];
            if norm < tolerance::ZERO_PROBABILITY {
                continue;
            }
            let ratio = m[3] / norm;
            let bayes_error = match est.kind {
                ErrorKind::Exact => 0.0,
                ErrorKind::Quadrature => (e[3] + ratio.abs() * e[2]) / norm,
                ErrorKind::MonteCarlo => {
                    // Linearised variance of the self-normalised ratio.
                    let var = (m[6] - 2.0 * ratio * m[7] + ratio * ratio * m[5]).max(0.0);
                    (var / n).sqrt() / norm
                }
            };
            points.push(PredictionPoint {
                a: *a,
                b: *b,
                outcome_a: *outcome,
                evidence: norm,
                bayes: ConditionedMean {
                    value: ratio,
                    error: bayes_error,
                    kind: est.kind,
                    degenerate_weight: m[4] / norm,
                },
                frozen: ConditionedMean {
                    value: m[0],
                    error: e[0],
                    kind: est.kind,
                    degenerate_weight: m[1],
                },
                quantum: -outcome.value() * a.cos_to(b),
            });
        }
    }
    points
}

/// Step-II predictions for every pair and outcome from a single pass over λ.
///
/// Per λ the second particle's mean is conditioned on `A′` where
/// `P(A′ | a, b, λ)` is nonzero and marginal elsewhere, as in
/// [`PosteriorLambda::second_mean`](crate::models::PosteriorLambda::second_mean).
/// Points where the ensemble `P(A′ | a, b)` vanishes are left out.
pub fn conditioned_predictions(
    model: &HvModel,
    pairs: &[(Setting, Setting)],
    outcomes: &[Outcome],
) -> Result<Vec<PredictionPoint>, ModelError> {
    let width = outcomes.len() * PER_POINT;
    let est = model.lambda_space().integrate(pairs.len() * width, |lambda, out| {
        for (k, (a, b)) in pairs.iter().enumerate() {
            let d = model.joint_at(a, b, lambda)?;
            fill_prediction(&d, outcomes, &mut out[k * width..(k + 1) * width]);
        }
        Ok(())
    })?;
    Ok(assemble_predictions(pairs, outcomes, &est))
}

/// Largest deviation of a model quantity from its quantum value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCell {
    pub consistent: bool,
    pub max_deviation: f64,
    /// Threshold applied at the point of largest deviation.
    pub tolerance: f64,
    /// Points whose deviation exceeds their own threshold.
    pub failures: usize,
    pub evaluated: usize,
    /// Points skipped because the conditioning outcome had zero probability.
    pub skipped: usize,
    pub witness: Option<Witness>,
}

#[derive(Default)]
struct CellTracker {
    max: f64,
    tolerance: f64,
    failures: usize,
    evaluated: usize,
    skipped: usize,
    witness: Option<Witness>,
}

impl CellTracker {
    fn observe(&mut self, deviation: f64, threshold: f64, witness: impl FnOnce() -> Witness) {
        self.evaluated += 1;
        if deviation > threshold {
            self.failures += 1;
        }
        if deviation > self.max || self.witness.is_none() {
            self.max = deviation;
            self.tolerance = threshold;
            self.witness = Some(witness());
        }
    }

    fn finish(self) -> ConsistencyCell {
        ConsistencyCell {
            consistent: self.failures == 0,
            max_deviation: self.max,
            tolerance: self.tolerance,
            failures: self.failures,
            evaluated: self.evaluated,
            skipped: self.skipped,
            witness: self.witness,
        }
    }
}

fn threshold(config: &CheckConfig, kind: ErrorKind, error: f64) -> f64 {
    match kind {
        ErrorKind::Exact => config.tolerance,
        ErrorKind::Quadrature => config.tolerance + error,
        ErrorKind::MonteCarlo => config.threshold(error),
    }
}

fn step2_cell(
    points: &[PredictionPoint],
    expected: usize,
    mode: ConditioningMode,
    config: &CheckConfig,
) -> ConsistencyCell {
    let mut t = CellTracker {
        skipped: expected - points.len(),
        ..CellTracker::default()
    };
    for p in points {
        let pred = p.prediction(mode);
        t.observe(
            (pred.value - p.quantum).abs(),
            threshold(config, pred.kind, pred.error),
            || Witness {
                outcome_a: Some(p.outcome_a),
                ..Witness::at(p.a, p.b)
            },
        );
    }
    t.finish()
}

/// One model's step-II prediction at `(a, b)` and its agreement with the
/// quantum value over the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelStepReport {
    pub model: String,
    pub mode: ConditioningMode,
    pub point: PredictionPoint,
    pub deviation: f64,
    pub tolerance: f64,
    pub consistent_at_point: bool,
    pub grid: ConsistencyCell,
}

pub fn run_model_steps(
    model: &HvModel,
    a: Setting,
    outcome_a: Outcome,
    b: Setting,
    mode: ConditioningMode,
    config: &CheckConfig,
) -> Result<ModelStepReport, PipelineError> {
    let point = *conditioned_predictions(model, &[(a, b)], &[outcome_a])?
        .first()
        .ok_or(ModelError::Conditioning {
            outcome: outcome_a,
            probability: 0.0,
        })?;
    let pred = point.prediction(mode);
    let deviation = (pred.value - point.quantum).abs();
    let tol = threshold(config, pred.kind, pred.error);
    let pairs = config.grid.pairs();
    let grid_points = conditioned_predictions(model, pairs, &[outcome_a])?;
    Ok(ModelStepReport {
        model: model.name().to_string(),
        mode,
        point,
        deviation,
        tolerance: tol,
        consistent_at_point: deviation <= tol,
        grid: step2_cell(&grid_points, pairs.len(), mode, config),
    })
}

/// Agreement of a model with the quantum predictions at each step over the
/// grid, for both registered outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConsistency {
    /// Ensemble `P(A, B | a, b)` against the singlet.
    pub step1: ConsistencyCell,
    /// `⟨σ₂_b⟩` given `A′` against `−A′ cos θ_ab`.
    pub step2_bayes: ConsistencyCell,
    pub step2_frozen: ConsistencyCell,
    /// `P(B′ | a, b, A′)` against `(1 − A′B′ cos θ_ab)/2`.
    pub step3: ConsistencyCell,
}

impl ModelConsistency {
    pub fn step2(&self, mode: ConditioningMode) -> &ConsistencyCell {
        match mode {
            ConditioningMode::Bayes => &self.step2_bayes,
            ConditioningMode::Frozen => &self.step2_frozen,
        }
    }
}

pub fn model_consistency(model: &HvModel, config: &CheckConfig) -> Result<ModelConsistency, PipelineError> {
    Ok(grid_pass(model, config)?.1)
}

/// Ensemble statistics and step-II predictions on `config.grid` from one
/// pass over λ, with the consistency cells derived from them.
pub(crate) fn grid_pass(
    model: &HvModel,
    config: &CheckConfig,
) -> Result<(GridEnsemble, ModelConsistency), PipelineError> {
    let outcomes = Outcome::BOTH;
    let (ensemble, extras) =
        GridEnsemble::compute_with(model, &config.grid, outcomes.len() * PER_POINT, |_, d, out| {
            fill_prediction(d, &outcomes, out)
        })?;
    let points = assemble_predictions(config.grid.pairs(), &outcomes, &extras);
    let consistency = consistency_from(&ensemble, &points, config)?;
    Ok((ensemble, consistency))
}

fn consistency_from(
    ensemble: &GridEnsemble,
    points: &[PredictionPoint],
    config: &CheckConfig,
) -> Result<ModelConsistency, PipelineError> {
    let pairs = ensemble.grid.pairs();
    let singlet = singlet_state();
    let mut step1 = CellTracker::default();
    let mut step3 = CellTracker::default();
    for ((a, b), e) in pairs.iter().zip(&ensemble.joints) {
        let q = joint_probability(&singlet, a, b)?;
        let d = &e.distribution;
        for oa in Outcome::BOTH {
            for ob in Outcome::BOTH {
                let (i, j) = (oa.index(), ob.index());
                let witness = || Witness {
                    outcome_a: Some(oa),
                    outcome_b: Some(ob),
                    ..Witness::at(*a, *b)
                };
                let dev = (d.get(oa, ob) - q.get(oa, ob)).abs();
                step1.observe(dev, threshold(config, e.kind, e.error[i][j]), witness);

                let pa = d.marginal_a(oa);
                if pa < tolerance::ZERO_PROBABILITY {
                    step3.skipped += 1;
                    continue;
                }
                let cond = d.get(oa, ob) / pa;
                let marginal_error = e.error[i][0].hypot(e.error[i][1]);
                let error = e.error[i][j].hypot(cond * marginal_error) / pa;
                let dev = (cond - q.conditional_b_given_a(oa)?.get(ob)).abs();
                step3.observe(dev, threshold(config, e.kind, error), witness);
            }
        }
    }
    let expected = 2 * pairs.len();
    Ok(ModelConsistency {
        step1: step1.finish(),
        step2_bayes: step2_cell(points, expected, ConditioningMode::Bayes, config),
        step2_frozen: step2_cell(points, expected, ConditioningMode::Frozen, config),
        step3: step3.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        bell_local_deterministic, factorizable_stochastic, oi_violating_qm, pi_violating_oi_respecting,
        posterior_lambda,
    };

    fn deg(d: f64) -> Setting {
        Setting::from_degrees(d)
    }

    #[test]
    fn batched_predictions_match_posterior() {
        let pairs = [(deg(0.0), deg(60.0)), (deg(30.0), deg(150.0))];
        for model in [
            pi_violating_oi_respecting(),
            oi_violating_qm(),
            bell_local_deterministic().with_sampling(30_000, 2),
        ] {
            let points = conditioned_predictions(&model, &pairs, &Outcome::BOTH).unwrap();
            for p in &points {
                for mode in ConditioningMode::BOTH {
                    let post = posterior_lambda(&model, &p.a, &p.b, p.outcome_a, mode).unwrap();
                    let mean = post.second_mean(&p.b).unwrap();
                    let pred = p.prediction(mode);
                    assert!((pred.value - mean.value).abs() < 1e-12, "{} {mode}", model.name());
                    assert!((pred.error - mean.error).abs() < 1e-3 * mean.error.max(1e-9));
                }
            }
        }
    }

    #[test]
    fn qm_model_is_consistent_at_every_step() {
        let c = model_consistency(&oi_violating_qm(), &CheckConfig::default()).unwrap();
        for cell in [&c.step1, &c.step2_bayes, &c.step2_frozen, &c.step3] {
            assert!(cell.consistent && cell.max_deviation < 1e-12, "{cell:?}");
        }
    }

    #[test]
    fn toy_model_needs_bayes_updating() {
        let c = model_consistency(&pi_violating_oi_respecting(), &CheckConfig::default()).unwrap();
        assert!(c.step2_bayes.consistent);
        assert!(!c.step2_frozen.consistent);
        assert!((c.step2_frozen.max_deviation - 1.0).abs() < 1e-12);
        let r = run_model_steps(
            &pi_violating_oi_respecting(),
            deg(0.0),
            Outcome::Plus,
            deg(90.0),
            ConditioningMode::Frozen,
            &CheckConfig::default(),
        )
        .unwrap();
        assert!(r.consistent_at_point && !r.grid.consistent);
    }

    #[test]
    fn stochastic_model_fails_in_both_modes() {
        let m = factorizable_stochastic().with_sampling(20_000, 5);
        let c = model_consistency(&m, &CheckConfig::default()).unwrap();
        assert!(!c.step1.consistent && !c.step2_bayes.consistent && !c.step2_frozen.consistent);
    }
}

use serde::{Deserialize, Serialize};

use super::{CheckConfig, CheckError, Condition, ConditionVerdict, Level, Target, Tracker, Witness};
use crate::grid::SettingsGrid;
use crate::models::{EnsembleJoint, ErrorKind, Estimate, HvModel};
use crate::quantum::{
    covariance, expectation, joint_probability, reduce_state, JointDistribution, Observable, Outcome, Particle,
    QuantumState,
};

/// Ensemble marginals `P(A | a, b)` compared across `b` (against the first
/// pair sharing `a`), and symmetrically for particle 2.
///
/// Monte Carlo models compare paired per-sample differences, so the band is
/// `σ` times the standard error of the difference itself.
pub fn check_no_signalling(target: Target<'_>, config: &CheckConfig) -> Result<ConditionVerdict, CheckError> {
    let grid = &config.grid;
    let (ref_a, ref_b) = (grid.reference_by_a(), grid.reference_by_b());
    let pairs = grid.pairs();
    let mut t = Tracker::default();
    let witness = |i: usize, r: usize, particle: Particle| {
        let (a, b) = pairs[i];
        let (ra, rb) = pairs[r];
        Witness {
            particle: Some(particle),
            alternate: Some(match particle {
                Particle::First => rb,
                Particle::Second => ra,
            }),
            ..Witness::at(a, b)
        }
    };
    let tolerance = match target {
        Target::State(state) => {
            let joints = pairs
                .iter()
                .map(|(a, b)| joint_probability(state, a, b))
                .collect::<Result<Vec<_>, _>>()?;
            for i in 0..pairs.len() {
                let da = joints[i].marginal_a(Outcome::Plus) - joints[ref_a[i]].marginal_a(Outcome::Plus);
                t.observe(da.abs(), || witness(i, ref_a[i], Particle::First));
                let db = joints[i].marginal_b(Outcome::Plus) - joints[ref_b[i]].marginal_b(Outcome::Plus);
                t.observe(db.abs(), || witness(i, ref_b[i], Particle::Second));
            }
            config.tolerance
        }
        Target::Model(model) => {
            let stats = GridEnsemble::compute(model, grid)?;
            return Ok(stats.no_signalling(config));
        }
    };
    Ok(t.verdict(Condition::NoSignalling, Level::Ensemble, tolerance))
}

fn band_tolerance(config: &CheckConfig, kind: ErrorKind, errors: &[f64]) -> f64 {
    let worst = errors.iter().copied().fold(0.0, f64::max);
    match kind {
        ErrorKind::Exact => config.tolerance,
        ErrorKind::Quadrature => config.tolerance + worst,
        ErrorKind::MonteCarlo => config.threshold(worst),
    }
}

/// `Cov(σ₁ₐ, σ₂_b)` over the grid. States support only the ensemble level.
///
/// For Monte Carlo models the ensemble covariance error ignores the
/// correlation between the three estimated moments.
pub fn check_separability(
    target: Target<'_>,
    level: Level,
    config: &CheckConfig,
) -> Result<ConditionVerdict, CheckError> {
    let pairs = config.grid.pairs();
    match (target, level) {
        (Target::State(state), Level::Ensemble) => {
            let mut t = Tracker::default();
            for (a, b) in pairs {
                let cov = covariance(state, a, b)?;
                t.observe(cov.abs(), || Witness::at(*a, *b));
            }
            Ok(t.verdict(Condition::Separability, Level::Ensemble, config.tolerance))
        }
        (Target::State(_), Level::PerLambda) => Err(CheckError::Unsupported(Condition::Separability, level)),
        (Target::Model(model), Level::PerLambda) => {
            let table = super::LambdaTable::build(model, &config.grid, config.lambda_probe)?;
            Ok(table.separability(config.tolerance))
        }
        (Target::Model(model), Level::Ensemble) => Ok(GridEnsemble::compute(model, &config.grid)?.separability(config)),
    }
}

/// Ensemble statistics of a model on a grid from one pass over λ.
///
/// Alongside the ensemble joints it keeps the per-sample differences used by
/// the no-signalling check, so Monte Carlo comparisons are paired.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEnsemble {
    pub grid: SettingsGrid,
    pub joints: Vec<EnsembleJoint>,
    /// `P(A=+1 | a, b) − P(A=+1 | a, b_ref)` and the particle-2 analogue,
    /// each with its error.
    pub signalling: Vec<[(f64, f64); 2]>,
    pub kind: ErrorKind,
    pub evaluations: usize,
}

const GRID_OUTPUTS: usize = 7;

impl GridEnsemble {
    pub fn compute(model: &HvModel, grid: &SettingsGrid) -> Result<Self, CheckError> {
        Ok(Self::compute_with(model, grid, 0, |_, _, _| {})?.0)
    }

    /// Same pass with `extra` further outputs per pair written by `fill`
    /// from that pair's per-λ joint. Returns the extra block as an estimate
    /// laid out pair by pair.
    pub(crate) fn compute_with<F>(
        model: &HvModel,
        grid: &SettingsGrid,
        extra: usize,
        fill: F,
    ) -> Result<(Self, Estimate), CheckError>
    where
        F: Fn(usize, &JointDistribution, &mut [f64]) + Sync,
    {
        let pairs = grid.pairs();
        let (ref_a, ref_b) = (grid.reference_by_a(), grid.reference_by_b());
        let width = GRID_OUTPUTS + extra;
        let est = model.lambda_space().integrate(pairs.len() * width, |lambda, out| {
            for (k, (a, b)) in pairs.iter().enumerate() {
                let d = model.joint_at(a, b, lambda)?;
                let t = d.table();
                let slot = &mut out[k * width..(k + 1) * width];
                slot[..5].copy_from_slice(&[t[0][0], t[0][1], t[1][0], t[1][1], d.correlation()]);
                fill(k, &d, &mut slot[GRID_OUTPUTS..]);
            }
            // Reference pairs come first in their groups, so their marginals
            // are already in place.
            for k in 0..pairs.len() {
                let marginal_a = |i: usize| out[i * width] + out[i * width + 1];
                let marginal_b = |i: usize| out[i * width] + out[i * width + 2];
                let da = marginal_a(k) - marginal_a(ref_a[k]);
                let db = marginal_b(k) - marginal_b(ref_b[k]);
                out[k * width + 5] = da;
                out[k * width + 6] = db;
            }
            Ok(())
        })?;
        let mut joints = Vec::with_capacity(pairs.len());
        let mut signalling = Vec::with_capacity(pairs.len());
        let mut extra_mean = Vec::with_capacity(pairs.len() * extra);
        let mut extra_error = Vec::with_capacity(pairs.len() * extra);
        for k in 0..pairs.len() {
            let m = &est.mean[k * width..(k + 1) * width];
            let e = &est.error[k * width..(k + 1) * width];
            joints.push(EnsembleJoint {
                distribution: JointDistribution::from_raw([[m[0], m[1]], [m[2], m[3]]]),
                error: [[e[0], e[1]], [e[2], e[3]]],
                correlation: m[4],
                correlation_error: e[4],
                kind: est.kind,
            });
            signalling.push([(m[5], e[5]), (m[6], e[6])]);
            extra_mean.extend_from_slice(&m[GRID_OUTPUTS..]);
            extra_error.extend_from_slice(&e[GRID_OUTPUTS..]);
        }
        let extras = Estimate {
            mean: extra_mean,
            error: extra_error,
            kind: est.kind,
            evaluations: est.evaluations,
        };
        Ok((
            GridEnsemble {
                grid: grid.clone(),
                joints,
                signalling,
                kind: est.kind,
                evaluations: est.evaluations,
            },
            extras,
        ))
    }

    pub fn no_signalling(&self, config: &CheckConfig) -> ConditionVerdict {
        let pairs = self.grid.pairs();
        let (ref_a, ref_b) = (self.grid.reference_by_a(), self.grid.reference_by_b());
        let mut t = Tracker::default();
        let mut errors = Vec::with_capacity(2 * pairs.len());
        for (k, [(da, ea), (db, eb)]) in self.signalling.iter().enumerate() {
            errors.push(*ea);
            errors.push(*eb);
            let (a, b) = pairs[k];
            t.observe(da.abs(), || Witness {
                particle: Some(Particle::First),
                alternate: Some(pairs[ref_a[k]].1),
                ..Witness::at(a, b)
            });
            t.observe(db.abs(), || Witness {
                particle: Some(Particle::Second),
                alternate: Some(pairs[ref_b[k]].0),
                ..Witness::at(a, b)
            });
        }
        t.verdict(
            Condition::NoSignalling,
            Level::Ensemble,
            band_tolerance(config, self.kind, &errors),
        )
    }

    /// Ensemble `|Cov(A, B)|`. For Monte Carlo the error ignores the
    /// correlation between the three estimated moments.
    pub fn separability(&self, config: &CheckConfig) -> ConditionVerdict {
        let mut t = Tracker::default();
        let mut errors = Vec::with_capacity(self.joints.len());
        for ((a, b), e) in self.grid.pairs().iter().zip(&self.joints) {
            let d = &e.distribution;
            let cov = d.correlation() - d.mean_a() * d.mean_b();
            let se_a = 2.0 * e.error[0][0].hypot(e.error[0][1]);
            let se_b = 2.0 * e.error[0][0].hypot(e.error[1][0]);
            errors
                .push((e.correlation_error.powi(2) + (d.mean_b() * se_a).powi(2) + (d.mean_a() * se_b).powi(2)).sqrt());
            t.observe(cov.abs(), || Witness::at(*a, *b));
        }
        t.verdict(
            Condition::Separability,
            Level::Ensemble,
            band_tolerance(config, self.kind, &errors),
        )
    }
}

/// How the second particle's mean, conditioned on the first particle's
/// registered outcome, depends on the first particle's setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionedDependence {
    pub outcome_a: Outcome,
    /// Largest spread of `⟨σ₂_b⟩` across `a` at fixed `b`.
    pub max_dependence: f64,
    pub tolerance: f64,
    pub a_dependent: bool,
    pub witness: Option<Witness>,
    /// Pairs where the registered outcome had zero probability.
    pub skipped: usize,
}

/// Reduces `state` on particle 1 along each grid `a` with outcome `A′` and
/// measures the `a`-dependence of `⟨σ₂_b⟩` in the reduced state.
pub fn conditioned_marginal_dependence(
    state: &QuantumState,
    outcome_a: Outcome,
    config: &CheckConfig,
) -> Result<ConditionedDependence, CheckError> {
    let pairs = config.grid.pairs();
    let mut means = Vec::with_capacity(pairs.len());
    let mut skipped = 0;
    for (a, b) in pairs {
        match reduce_state(state, Particle::First, a, outcome_a) {
            Ok(reduced) => means.push(Some(expectation(&reduced, &Observable::spin(Particle::Second, *b))?)),
            Err(crate::quantum::QuantumError::Reduction { .. }) => {
                skipped += 1;
                means.push(None);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut max_dependence: f64 = 0.0;
    let mut witness = None;
    for group in config.grid.group_by_b() {
        let defined: Vec<(usize, f64)> = group.iter().filter_map(|&i| means[i].map(|m| (i, m))).collect();
        let Some(&(lo, lo_v)) = defined.iter().min_by(|x, y| x.1.total_cmp(&y.1)) else {
            continue;
        };
        let &(hi, hi_v) = defined.iter().max_by(|x, y| x.1.total_cmp(&y.1)).expect("nonempty");
        if hi_v - lo_v > max_dependence {
            max_dependence = hi_v - lo_v;
            let (a, b) = pairs[hi];
            witness = Some(Witness {
                alternate: Some(pairs[lo].0),
                particle: Some(Particle::Second),
                outcome_a: Some(outcome_a),
                ..Witness::at(a, b)
            });
        }
    }
    Ok(ConditionedDependence {
        outcome_a,
        max_dependence,
        tolerance: config.tolerance,
        a_dependent: max_dependence > config.tolerance,
        witness,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{oi_violating_qm, pi_violating_oi_respecting, zoo};
    use crate::quantum::{singlet_state, Setting};

    fn cfg() -> CheckConfig {
        CheckConfig::default()
    }

    #[test]
    fn singlet_does_not_signal_but_is_not_separable() {
        let psi = singlet_state();
        assert!(check_no_signalling(Target::State(&psi), &cfg()).unwrap().pass);
        let sep = check_separability(Target::State(&psi), Level::Ensemble, &cfg()).unwrap();
        assert!(!sep.pass);
        assert!((sep.max_violation - 1.0).abs() < 1e-12);
        assert!(check_separability(Target::State(&psi), Level::PerLambda, &cfg()).is_err());
    }

    #[test]
    fn reduced_state_is_separable() {
        let psi = singlet_state();
        let m = reduce_state(&psi, Particle::First, &Setting::from_degrees(30.0), Outcome::Plus).unwrap();
        assert!(
            check_separability(Target::State(&m), Level::Ensemble, &cfg())
                .unwrap()
                .pass
        );
    }

    #[test]
    fn conditioned_mean_depends_on_distant_setting() {
        let dep = conditioned_marginal_dependence(&singlet_state(), Outcome::Plus, &cfg()).unwrap();
        assert!(dep.a_dependent);
        assert!((dep.max_dependence - 2.0).abs() < 1e-12);
        assert_eq!(dep.skipped, 0);
    }

    #[test]
    fn finite_zoo_models_do_not_signal() {
        for m in [oi_violating_qm(), pi_violating_oi_respecting()] {
            let v = check_no_signalling(Target::Model(&m), &cfg()).unwrap();
            assert!(v.pass, "{}: {v:?}", m.name());
        }
    }

    #[test]
    fn sphere_models_do_not_signal_within_band() {
        for m in zoo().into_iter().filter(|m| m.is_monte_carlo()) {
            let m = m.with_sampling(20_000, 1);
            let v = check_no_signalling(Target::Model(&m), &cfg()).unwrap();
            assert!(v.pass, "{}: {v:?}", m.name());
        }
    }

    #[test]
    fn pi_violating_model_separable_per_lambda_only() {
        let m = pi_violating_oi_respecting();
        assert!(
            check_separability(Target::Model(&m), Level::PerLambda, &cfg())
                .unwrap()
                .pass
        );
        assert!(
            !check_separability(Target::Model(&m), Level::Ensemble, &cfg())
                .unwrap()
                .pass
        );
    }
}

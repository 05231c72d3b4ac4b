use rayon::prelude::*;

use super::{CheckConfig, CheckError, Condition, ConditionVerdict, Level, Tracker, Witness};
use crate::grid::SettingsGrid;
use crate::models::{HvModel, Lambda};
use crate::quantum::{JointDistribution, Outcome, Particle};
use crate::tolerance;

/// `P(A, B | a, b, λ)` tabulated over λ probe points and grid pairs.
#[derive(Debug, Clone)]
pub struct LambdaTable {
    pub lambdas: Vec<Lambda>,
    pub grid: SettingsGrid,
    /// Indexed `[λ][pair]`.
    pub joints: Vec<Vec<JointDistribution>>,
}

impl LambdaTable {
    pub fn build(model: &HvModel, grid: &SettingsGrid, probe_limit: usize) -> Result<Self, CheckError> {
        let lambdas: Vec<Lambda> = model
            .lambda_space()
            .probe(probe_limit)
            .into_iter()
            .map(|(l, _)| l)
            .collect();
        let joints = lambdas
            .par_iter()
            .map(|lambda| {
                grid.pairs()
                    .iter()
                    .map(|(a, b)| model.joint_at(a, b, lambda))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LambdaTable {
            lambdas,
            grid: grid.clone(),
            joints,
        })
    }

    fn witness(&self, lambda: usize, pair: usize) -> Witness {
        let (a, b) = self.grid.pairs()[pair];
        Witness {
            lambda: Some(self.lambdas[lambda]),
            ..Witness::at(a, b)
        }
    }

    /// Parameter independence: per λ, the spread of `P(A=+1 | a, b, λ)` over
    /// all `b` at fixed `a`, and symmetrically for particle 2.
    pub fn parameter_independence(&self, tol: f64) -> ConditionVerdict {
        let mut t = Tracker::default();
        for (k, row) in self.joints.iter().enumerate() {
            for (particle, groups) in [
                (Particle::First, self.grid.group_by_a()),
                (Particle::Second, self.grid.group_by_b()),
            ] {
                let marginal = |i: usize| match particle {
                    Particle::First => row[i].marginal_a(Outcome::Plus),
                    Particle::Second => row[i].marginal_b(Outcome::Plus),
                };
                for group in groups {
                    let lo = *group
                        .iter()
                        .min_by(|x, y| marginal(**x).total_cmp(&marginal(**y)))
                        .expect("nonempty");
                    let hi = *group
                        .iter()
                        .max_by(|x, y| marginal(**x).total_cmp(&marginal(**y)))
                        .expect("nonempty");
                    t.observe(marginal(hi) - marginal(lo), || {
                        let (a_lo, b_lo) = self.grid.pairs()[lo];
                        Witness {
                            particle: Some(particle),
                            alternate: Some(match particle {
                                Particle::First => b_lo,
                                Particle::Second => a_lo,
                            }),
                            ..self.witness(k, hi)
                        }
                    });
                }
            }
        }
        t.verdict(Condition::ParameterIndependence, Level::PerLambda, tol)
    }

    /// Outcome independence via the per-λ covariance, which vanishes exactly
    /// when the `±1` outcomes are independent given λ. The direct
    /// conditional gap is recorded in the notes.
    pub fn outcome_independence(&self, tol: f64) -> ConditionVerdict {
        let mut t = Tracker::default();
        let mut gap = Tracker::default();
        for (k, row) in self.joints.iter().enumerate() {
            for (i, d) in row.iter().enumerate() {
                t.observe(d.covariance().abs(), || self.witness(k, i));
                for o in Outcome::BOTH {
                    match d.conditional_a_given_b(o) {
                        Ok(c) => gap.observe((c.plus - d.marginal_a(Outcome::Plus)).abs(), || self.witness(k, i)),
                        Err(_) => gap.skip(),
                    }
                    match d.conditional_b_given_a(o) {
                        Ok(c) => gap.observe((c.plus - d.marginal_b(Outcome::Plus)).abs(), || self.witness(k, i)),
                        Err(_) => gap.skip(),
                    }
                }
            }
        }
        let mut v = t.verdict(Condition::OutcomeIndependence, Level::PerLambda, tol);
        v.skipped = gap.skipped;
        v.notes.push(format!(
            "max conditional gap |P(A|a,b,B,λ) - P(A|a,b,λ)| = {:e}",
            gap.max
        ));
        v
    }

    /// `|P(A,B|a,b,λ) − P(A|a,λ) P(B|b,λ)|` with the single-side marginals
    /// taken at the reference pair of each group.
    pub fn factorizability(&self, tol: f64) -> ConditionVerdict {
        let (ref_a, ref_b) = (self.grid.reference_by_a(), self.grid.reference_by_b());
        let mut t = Tracker::default();
        for (k, row) in self.joints.iter().enumerate() {
            for (i, d) in row.iter().enumerate() {
                let pa = row[ref_a[i]].marginal_a(Outcome::Plus);
                let pb = row[ref_b[i]].marginal_b(Outcome::Plus);
                let product = JointDistribution::product(pa, pb);
                t.observe(d.max_abs_diff(&product), || self.witness(k, i));
            }
        }
        t.verdict(Condition::Factorizability, Level::PerLambda, tol)
    }

    /// `P(A | a, b, B, λ) = P(A | a, λ)` and `P(B | a, b, A, λ) = P(B | b, λ)`.
    pub fn local_causality(&self, tol: f64) -> ConditionVerdict {
        let (ref_a, ref_b) = (self.grid.reference_by_a(), self.grid.reference_by_b());
        let mut t = Tracker::default();
        for (k, row) in self.joints.iter().enumerate() {
            for (i, d) in row.iter().enumerate() {
                let local_a = row[ref_a[i]].marginal_a(Outcome::Plus);
                let local_b = row[ref_b[i]].marginal_b(Outcome::Plus);
                for o in Outcome::BOTH {
                    match d.conditional_a_given_b(o) {
                        Ok(c) => t.observe((c.plus - local_a).abs(), || Witness {
                            outcome_b: Some(o),
                            particle: Some(Particle::First),
                            ..self.witness(k, i)
                        }),
                        Err(_) => t.skip(),
                    }
                    match d.conditional_b_given_a(o) {
                        Ok(c) => t.observe((c.plus - local_b).abs(), || Witness {
                            outcome_a: Some(o),
                            particle: Some(Particle::Second),
                            ..self.witness(k, i)
                        }),
                        Err(_) => t.skip(),
                    }
                }
            }
        }
        t.verdict(Condition::LocalCausality, Level::PerLambda, tol)
    }

    /// Per-λ `|Cov(A, B)|`.
    pub fn separability(&self, tol: f64) -> ConditionVerdict {
        let mut t = Tracker::default();
        for (k, row) in self.joints.iter().enumerate() {
            for (i, d) in row.iter().enumerate() {
                t.observe(d.covariance().abs(), || self.witness(k, i));
            }
        }
        t.verdict(Condition::Separability, Level::PerLambda, tol)
    }

    /// Number of per-λ joints with all four entries in `{0, 1}`.
    pub fn deterministic_count(&self) -> usize {
        self.joints
            .iter()
            .flatten()
            .filter(|d| d.deterministic_entries(tolerance::EXACT) == 4)
            .count()
    }
}

fn table(model: &HvModel, config: &CheckConfig) -> Result<LambdaTable, CheckError> {
    LambdaTable::build(model, &config.grid, config.lambda_probe)
}

pub fn check_parameter_independence(model: &HvModel, config: &CheckConfig) -> Result<ConditionVerdict, CheckError> {
    Ok(table(model, config)?.parameter_independence(config.tolerance))
}

pub fn check_outcome_independence(model: &HvModel, config: &CheckConfig) -> Result<ConditionVerdict, CheckError> {
    Ok(table(model, config)?.outcome_independence(config.tolerance))
}

pub fn check_factorizability(model: &HvModel, config: &CheckConfig) -> Result<ConditionVerdict, CheckError> {
    Ok(table(model, config)?.factorizability(config.tolerance))
}

pub fn check_local_causality(model: &HvModel, config: &CheckConfig) -> Result<ConditionVerdict, CheckError> {
    Ok(table(model, config)?.local_causality(config.tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        bell_local_deterministic, factorizable_stochastic, oi_violating_qm, pi_violating_oi_respecting,
    };

    fn cfg() -> CheckConfig {
        CheckConfig {
            lambda_probe: 256,
            ..CheckConfig::default()
        }
    }

    #[test]
    fn oi_violation_witness_at_equal_settings() {
        let v = check_outcome_independence(&oi_violating_qm(), &cfg()).unwrap();
        assert!(!v.pass);
        assert!((v.max_violation - 1.0).abs() < 1e-12);
        let w = v.witness.unwrap();
        assert!(w.a.angle_to(&w.b) < 1e-12 || (w.a.angle_to(&w.b) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn deterministic_model_respects_oi_and_pi() {
        let m = bell_local_deterministic();
        let table = LambdaTable::build(&m, &cfg().grid, 256).unwrap();
        assert_eq!(table.deterministic_count(), 256 * 169);
        let oi = table.outcome_independence(1e-9);
        assert!(oi.pass);
        assert!(oi.skipped > 0, "deterministic conditionings must be skipped");
        assert!(table.parameter_independence(1e-9).pass);
        assert!(table.factorizability(1e-9).pass);
        assert!(table.local_causality(1e-9).pass);
    }

    #[test]
    fn pi_violation_is_detected() {
        let v = check_parameter_independence(&pi_violating_oi_respecting(), &cfg()).unwrap();
        assert!(!v.pass);
        assert!((v.max_violation - 1.0).abs() < 1e-12);
        let w = v.witness.unwrap();
        assert_eq!(w.particle, Some(Particle::First));
        assert!(w.alternate.is_some() && w.lambda.is_some());
        assert!(
            check_outcome_independence(&pi_violating_oi_respecting(), &cfg())
                .unwrap()
                .pass
        );
        assert!(
            !check_factorizability(&pi_violating_oi_respecting(), &cfg())
                .unwrap()
                .pass
        );
        assert!(
            !check_local_causality(&pi_violating_oi_respecting(), &cfg())
                .unwrap()
                .pass
        );
    }

    #[test]
    fn oi_violating_model_respects_pi() {
        let m = oi_violating_qm();
        assert!(check_parameter_independence(&m, &cfg()).unwrap().pass);
        assert!(!check_factorizability(&m, &cfg()).unwrap().pass);
        assert!(!check_local_causality(&m, &cfg()).unwrap().pass);
    }

    #[test]
    fn stochastic_factorizable_model_passes_everything() {
        let m = factorizable_stochastic();
        let table = LambdaTable::build(&m, &cfg().grid, 256).unwrap();
        for v in [
            table.parameter_independence(1e-9),
            table.outcome_independence(1e-9),
            table.factorizability(1e-9),
            table.local_causality(1e-9),
            table.separability(1e-9),
        ] {
            assert!(v.pass, "{v:?}");
            assert!(v.witness.is_none() || v.max_violation > 0.0);
        }
    }
}

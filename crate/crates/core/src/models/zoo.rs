//! Built-in models spanning the PI/OI taxonomy.

use super::{HvModel, Lambda, LambdaSpace, ModelError, ModelFlags};
use crate::quantum::{JointDistribution, Outcome, Setting};
use crate::tolerance;

/// CLI names of the zoo models, in table order.
pub const ZOO_NAMES: [&str; 4] = [
    "bell-local",
    "factorizable-stochastic",
    "oi-violating-qm",
    "pi-violating",
];

fn unit_vector(model: &str, lambda: &Lambda) -> Result<[f64; 3], ModelError> {
    lambda
        .vector()
        .ok_or_else(|| ModelError::InvalidSpace(format!("{model} expects a unit-vector λ, got {lambda:?}")))
}

fn sphere() -> LambdaSpace {
    LambdaSpace::Sphere {
        samples: tolerance::DEFAULT_SAMPLES,
        seed: tolerance::DEFAULT_SEED,
    }
}

/// λ uniform on the sphere; `A = sign(a·λ)`, `B = −sign(b·λ)`.
pub fn bell_local_deterministic() -> HvModel {
    let flags = ModelFlags {
        deterministic: true,
        claims_pi: true,
        claims_oi: true,
    };
    HvModel::new(
        "bell-local",
        sphere(),
        flags,
        |a: &Setting, b: &Setting, lambda: &Lambda| {
            let v = unit_vector("bell-local", lambda)?;
            let outcome_a = Outcome::of_sign(a.dot(&v));
            let outcome_b = Outcome::of_sign(b.dot(&v)).flip();
            Ok(JointDistribution::deterministic(outcome_a, outcome_b))
        },
    )
}

/// λ uniform on the sphere; `P(A|a,λ) = (1 + A a·λ)/2`,
/// `P(B|b,λ) = (1 − B b·λ)/2`, independent given λ.
pub fn factorizable_stochastic() -> HvModel {
    let flags = ModelFlags {
        deterministic: false,
        claims_pi: true,
        claims_oi: true,
    };
    HvModel::new(
        "factorizable-stochastic",
        sphere(),
        flags,
        |a: &Setting, b: &Setting, lambda: &Lambda| {
            let v = unit_vector("factorizable-stochastic", lambda)?;
            Ok(JointDistribution::product(
                (1.0 + a.dot(&v)) / 2.0,
                (1.0 - b.dot(&v)) / 2.0,
            ))
        },
    )
}

/// Single λ whose joint is the singlet law `(1 − AB cos θ_ab)/4`.
/// Respects PI, violates OI.
pub fn oi_violating_qm() -> HvModel {
    let flags = ModelFlags {
        deterministic: false,
        claims_pi: true,
        claims_oi: false,
    };
    let space = LambdaSpace::Finite {
        points: vec![Lambda::Index(0)],
        weights: vec![1.0],
    };
    HvModel::new(
        "oi-violating-qm",
        space,
        flags,
        |a: &Setting, b: &Setting, _: &Lambda| {
            let c = a.cos_to(b);
            let same = (1.0 - c) / 4.0;
            let diff = (1.0 + c) / 4.0;
            JointDistribution::new([[same, diff], [diff, same]]).map_err(|source| ModelError::Distribution {
                model: "oi-violating-qm".into(),
                source,
            })
        },
    )
}

/// λ ∈ {+1, −1} equiprobable; `P(A|a,b,λ) = (1 + Aλ cos θ_ab)/2`,
/// `P(B|a,b,λ) = (1 − Bλ)/2`, independent given λ. Respects OI, violates PI.
pub fn pi_violating_oi_respecting() -> HvModel {
    let flags = ModelFlags {
        deterministic: false,
        claims_pi: false,
        claims_oi: true,
    };
    let space = LambdaSpace::Finite {
        points: vec![Lambda::Scalar(1.0), Lambda::Scalar(-1.0)],
        weights: vec![0.5, 0.5],
    };
    HvModel::new(
        "pi-violating",
        space,
        flags,
        |a: &Setting, b: &Setting, lambda: &Lambda| {
            let l = lambda
                .scalar()
                .ok_or_else(|| ModelError::InvalidSpace(format!("pi-violating expects a scalar λ, got {lambda:?}")))?;
            let c = a.cos_to(b);
            Ok(JointDistribution::product((1.0 + l * c) / 2.0, (1.0 - l) / 2.0))
        },
    )
}

pub fn zoo() -> Vec<HvModel> {
    vec![
        bell_local_deterministic(),
        factorizable_stochastic(),
        oi_violating_qm(),
        pi_violating_oi_respecting(),
    ]
}

/// Looks a zoo model up by CLI name. Underscores and long names are accepted.
pub fn by_name(name: &str) -> Result<HvModel, ModelError> {
    let key = name.trim().to_ascii_lowercase().replace('_', "-");
    match key.as_str() {
        "bell-local" | "bell-local-deterministic" => Ok(bell_local_deterministic()),
        "factorizable-stochastic" => Ok(factorizable_stochastic()),
        "oi-violating-qm" => Ok(oi_violating_qm()),
        "pi-violating" | "pi-violating-oi-respecting" => Ok(pi_violating_oi_respecting()),
        _ => Err(ModelError::UnknownModel(name.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(d: f64) -> Setting {
        Setting::from_degrees(d)
    }

    #[test]
    fn oi_violating_model_reproduces_singlet_law() {
        let m = oi_violating_qm();
        let e = m.ensemble_joint(&deg(0.0), &deg(60.0)).unwrap();
        assert!((e.distribution.get(Outcome::Plus, Outcome::Minus) - 0.375).abs() < 1e-12);
        let d = m.joint_at(&deg(0.0), &deg(0.0), &Lambda::Index(0)).unwrap();
        assert!((d.covariance() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pi_violating_model_by_hand() {
        let m = pi_violating_oi_respecting();
        let at = |b: f64, l: f64| {
            m.joint_at(&deg(0.0), &deg(b), &Lambda::Scalar(l))
                .unwrap()
                .marginal_a(Outcome::Plus)
        };
        assert!((at(0.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((at(90.0, 1.0) - 0.5).abs() < 1e-12);
        let e = m.ensemble_joint(&deg(0.0), &deg(60.0)).unwrap();
        assert!((e.correlation + 0.5).abs() < 1e-12);
        for theta in [0.0, 30.0, 90.0, 150.0] {
            let e = m.ensemble_joint(&deg(0.0), &deg(theta)).unwrap().distribution;
            for o in Outcome::BOTH {
                assert!((e.marginal_a(o) - 0.5).abs() < 1e-12);
                assert!((e.marginal_b(o) - 0.5).abs() < 1e-12);
            }
            for l in [1.0, -1.0] {
                let d = m.joint_at(&deg(0.0), &deg(theta), &Lambda::Scalar(l)).unwrap();
                assert!(d.covariance().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sign_model_is_anticorrelated_at_equal_settings() {
        let m = bell_local_deterministic().with_sampling(20_000, 11);
        let e = m.ensemble_joint(&deg(30.0), &deg(30.0)).unwrap();
        assert_eq!(e.distribution.get(Outcome::Plus, Outcome::Plus), 0.0);
        assert_eq!(e.distribution.get(Outcome::Minus, Outcome::Minus), 0.0);
        assert_eq!(e.correlation, -1.0);
        let p = e.distribution.get(Outcome::Plus, Outcome::Minus);
        assert!((p - 0.5).abs() < 5.0 * e.error[0][1]);
    }

    #[test]
    fn factorizable_model_correlation() {
        let m = factorizable_stochastic().with_sampling(200_000, 5);
        for theta in [0.0, 60.0, 120.0] {
            let e = m.ensemble_joint(&deg(0.0), &deg(theta)).unwrap();
            let oracle = -theta.to_radians().cos() / 3.0;
            assert!((e.correlation - oracle).abs() < 5.0 * e.correlation_error);
        }
    }

    #[test]
    fn lookup_by_name() {
        for name in ZOO_NAMES {
            assert_eq!(by_name(name).unwrap().name(), name);
        }
        assert_eq!(by_name("bell_local_deterministic").unwrap().name(), "bell-local");
        assert!(matches!(by_name("nope"), Err(ModelError::UnknownModel(_))));
    }

    #[test]
    fn deterministic_model_has_point_mass_per_lambda() {
        let m = bell_local_deterministic();
        for (lambda, _) in m.lambda_space().probe(64) {
            let d = m.joint_at(&deg(10.0), &deg(100.0), &lambda).unwrap();
            assert_eq!(d.deterministic_entries(0.0), 4);
            assert_eq!(d.covariance(), 0.0);
        }
    }
}

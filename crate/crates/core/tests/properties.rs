use eprb_core::checks::{chsh_value, classify_model, CheckConfig, SettingsGrid};
use eprb_core::models::{bell_local_deterministic, HvModel, ModelFlags, TableEntry, TableModelSpec};
use eprb_core::pipeline::{run_step1, run_step2};
use eprb_core::quantum::{
    conditional_probability, joint_probability, marginal_probability, reduce_state, singlet_state, Outcome, Particle,
    Setting,
};
use proptest::prelude::*;

const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

fn deg(d: f64) -> Setting {
    Setting::from_degrees(d)
}

fn outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![Just(Outcome::Plus), Just(Outcome::Minus)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singlet_joint_is_normalised_on_theta_grid(a in -360.0..360.0f64) {
        let psi = singlet_state();
        for theta in 0..=180 {
            let p = joint_probability(&psi, &deg(a), &deg(a + theta as f64)).unwrap();
            let t = p.table();
            prop_assert!(t.iter().flatten().all(|x| *x >= 0.0));
            prop_assert!((p.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_is_marginal_times_conditional(a in -180.0..180.0f64, b in -180.0..180.0f64, oa in outcome(), ob in outcome()) {
        let psi = singlet_state();
        let joint = joint_probability(&psi, &deg(a), &deg(b)).unwrap().get(oa, ob);
        let pa = marginal_probability(&psi, Particle::First, &deg(a), oa).unwrap();
        let cond = conditional_probability(&psi, &deg(a), &deg(b), oa).unwrap().get(ob);
        prop_assert!((joint - pa * cond).abs() < 1e-12);
        let closed = (1.0 - oa.value() * ob.value() * (b - a).to_radians().cos()) / 4.0;
        prop_assert!((joint - closed).abs() < 1e-12);
    }

    #[test]
    fn singlet_statistics_are_rotation_invariant(a in -180.0..180.0f64, b in -180.0..180.0f64, phi in -180.0..180.0f64) {
        let psi = singlet_state();
        let p = joint_probability(&psi, &deg(a), &deg(b)).unwrap();
        let q = joint_probability(&psi, &deg(a + phi), &deg(b + phi)).unwrap();
        prop_assert!(p.max_abs_diff(&q) < 1e-12);
    }

    #[test]
    fn reduction_reproduces_conditional(a in -180.0..180.0f64, b in -180.0..180.0f64, oa in outcome()) {
        let psi = singlet_state();
        let reduced = reduce_state(&psi, Particle::First, &deg(a), oa).unwrap();
        let after = joint_probability(&reduced, &deg(a), &deg(b)).unwrap();
        let cond = conditional_probability(&psi, &deg(a), &deg(b), oa).unwrap();
        for ob in Outcome::BOTH {
            prop_assert!((after.get(oa, ob) - cond.get(ob)).abs() < 1e-12);
            prop_assert!(after.get(oa.flip(), ob).abs() < 1e-12);
        }
        let mean_b = after.mean_b();
        prop_assert!((mean_b + oa.value() * (b - a).to_radians().cos()).abs() < 1e-12);
    }

    #[test]
    fn step_two_keeps_step_one_correlation(a in -180.0..180.0f64, b in -180.0..180.0f64, oa in outcome()) {
        let config = CheckConfig::default();
        let s1 = run_step1(deg(a), deg(b), &config).unwrap();
        let s2 = run_step2(deg(a), oa, deg(b), &config).unwrap();
        prop_assert!((s1.quantities.joint_expectation - s2.quantities.joint_expectation).abs() < 1e-12);
        prop_assert!(s2.quantities.covariance.abs() < 1e-12);
    }

    #[test]
    fn singlet_respects_tsirelson(q in prop::array::uniform4(-180.0..180.0f64)) {
        prop_assume!((q[0] - q[1]).abs() > 1e-6 && (q[2] - q[3]).abs() > 1e-6);
        let psi = singlet_state();
        let r = chsh_value((&psi).into(), deg(q[0]), deg(q[1]), deg(q[2]), deg(q[3]), &CheckConfig::default()).unwrap();
        prop_assert!(r.abs_s <= TSIRELSON + 1e-9, "|S| = {}", r.abs_s);
        let closed = -(q[0] - q[2]).to_radians().cos() + (q[0] - q[3]).to_radians().cos()
            - (q[1] - q[2]).to_radians().cos() - (q[1] - q[3]).to_radians().cos();
        prop_assert!((r.s - closed).abs() < 1e-12);
    }
}

/// Per-λ table kind: 0 local product, 1 product with `b`-dependent `A`
/// marginal, 2 local marginals with correlation, 3 arbitrary.
#[derive(Debug, Clone)]
struct LambdaTables {
    kind: u8,
    a_marg: [f64; 2],
    b_marg: [f64; 2],
    shift: f64,
    corr: [f64; 4],
    generic: [[f64; 4]; 4],
}

fn lambda_tables() -> impl Strategy<Value = LambdaTables> {
    (
        0u8..4,
        prop::array::uniform2(0.1..0.9f64),
        prop::array::uniform2(0.1..0.9f64),
        0.05..0.09f64,
        prop::array::uniform4(0.2..1.0f64),
        prop::array::uniform4(prop::array::uniform4(0.01..1.0f64)),
    )
        .prop_map(|(kind, a_marg, b_marg, shift, corr, generic)| LambdaTables {
            kind,
            a_marg,
            b_marg,
            shift,
            corr,
            generic,
        })
}

fn product(pa: f64, pb: f64, c: f64) -> [[f64; 2]; 2] {
    [
        [pa * pb + c, pa * (1.0 - pb) - c],
        [(1.0 - pa) * pb - c, (1.0 - pa) * (1.0 - pb) + c],
    ]
}

impl LambdaTables {
    fn table(&self, i: usize, j: usize) -> [[f64; 2]; 2] {
        let (pa, pb) = (self.a_marg[i], self.b_marg[j]);
        match self.kind {
            0 => product(pa, pb, 0.0),
            1 => product(pa + if j == 0 { self.shift } else { -self.shift }, pb, 0.0),
            2 => {
                let hi = (pa * (1.0 - pb)).min((1.0 - pa) * pb);
                product(pa, pb, self.corr[2 * i + j] * hi)
            }
            _ => {
                let g = self.generic[2 * i + j];
                let s: f64 = g.iter().sum();
                [[g[0] / s, g[1] / s], [g[2] / s, g[3] / s]]
            }
        }
    }
}

const A_DEG: [f64; 2] = [0.0, 90.0];
const B_DEG: [f64; 2] = [45.0, 135.0];

fn build(lambdas: &[LambdaTables], weights: &[f64], flags: ModelFlags) -> HvModel {
    let mut tables = Vec::new();
    for (i, a) in A_DEG.iter().enumerate() {
        for (j, b) in B_DEG.iter().enumerate() {
            for (k, l) in lambdas.iter().enumerate() {
                tables.push(TableEntry {
                    a: *a,
                    b: *b,
                    lambda: k,
                    p: l.table(i, j),
                });
            }
        }
    }
    let total: f64 = weights.iter().sum();
    TableModelSpec {
        schema_version: 1,
        name: "random".into(),
        weights: weights.iter().map(|w| w / total).collect(),
        a_degrees: A_DEG.to_vec(),
        b_degrees: B_DEG.to_vec(),
        flags,
        tables,
    }
    .build()
    .unwrap()
}

fn grid_config() -> CheckConfig {
    let a: Vec<Setting> = A_DEG.iter().map(|d| deg(*d)).collect();
    let b: Vec<Setting> = B_DEG.iter().map(|d| deg(*d)).collect();
    CheckConfig::default().with_grid(SettingsGrid::cartesian(&a, &b).unwrap())
}

fn random_model() -> impl Strategy<Value = (Vec<LambdaTables>, Vec<f64>)> {
    (1usize..4).prop_flat_map(|n| {
        (
            prop::collection::vec(lambda_tables(), n),
            prop::collection::vec(0.1..1.0f64, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn factorizability_is_pi_and_oi((lambdas, weights) in random_model()) {
        let m = build(&lambdas, &weights, ModelFlags::default());
        let c = classify_model(&m, &grid_config()).unwrap().classification;
        prop_assert_eq!(c.factorizability, c.parameter_independence && c.outcome_independence);
        if lambdas.iter().all(|l| l.kind < 3) {
            prop_assert_eq!(c.parameter_independence, lambdas.iter().all(|l| l.kind != 1));
            prop_assert_eq!(c.outcome_independence, lambdas.iter().all(|l| l.kind != 2));
        }
    }

    #[test]
    fn outcome_independence_is_zero_covariance((lambdas, weights) in random_model()) {
        let m = build(&lambdas, &weights, ModelFlags::default());
        let config = grid_config();
        let c = classify_model(&m, &config).unwrap().classification;
        let mut max_cov: f64 = 0.0;
        for l in &lambdas {
            for i in 0..2 {
                for j in 0..2 {
                    let t = l.table(i, j);
                    let pa = t[0][0] + t[0][1];
                    let pb = t[0][0] + t[1][0];
                    let gap = (t[0][0] - pa * pb).abs();
                    // ±1 covariance of a binary pair is 4(p₊₊ − p₊·p·₊).
                    max_cov = max_cov.max(4.0 * gap);
                }
            }
        }
        prop_assume!(!(1e-12..=1e-6).contains(&max_cov));
        prop_assert_eq!(c.outcome_independence, max_cov < 1e-12, "max |cov| = {}", max_cov);
    }

    #[test]
    fn factorizable_models_obey_chsh(lambdas in prop::collection::vec(lambda_tables(), 1..5), seed_weights in prop::collection::vec(0.1..1.0f64, 4)) {
        let lambdas: Vec<LambdaTables> = lambdas.into_iter().map(|mut l| { l.kind = 0; l }).collect();
        let weights = &seed_weights[..lambdas.len().min(seed_weights.len())];
        let lambdas = &lambdas[..weights.len()];
        let m = build(lambdas, weights, ModelFlags { deterministic: false, claims_pi: true, claims_oi: true });
        let r = chsh_value((&m).into(), deg(A_DEG[0]), deg(A_DEG[1]), deg(B_DEG[0]), deg(B_DEG[1]), &grid_config()).unwrap();
        prop_assert!(r.abs_s <= 2.0 + 1e-12, "|S| = {}", r.abs_s);
        prop_assert!(r.within_classical);
    }
}

#[test]
fn monte_carlo_is_independent_of_thread_count() {
    let model = bell_local_deterministic().with_sampling(50_000, 11);
    let pairs = [(deg(0.0), deg(45.0)), (deg(30.0), deg(170.0))];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| model.ensemble_many(&pairs).unwrap())
    };
    let one = run(1);
    for threads in [2, 4] {
        let other = run(threads);
        for (x, y) in one.iter().zip(&other) {
            assert_eq!(x.distribution.table(), y.distribution.table());
            assert_eq!(x.correlation.to_bits(), y.correlation.to_bits());
        }
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::checks::{
    check_no_signalling, check_separability, conditioned_marginal_dependence, CheckConfig, ConditionVerdict,
    ConditionedDependence, Level, Target,
};
use crate::quantum::{
    covariance, expectation, joint_expectation, joint_probability, reduce_state, singlet_state, JointDistribution,
    Observable, Outcome, OutcomeDistribution, Particle, QuantumState, Setting,
};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    I,
    II,
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    NotApplicable,
    Satisfied,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInputs {
    pub a: Setting,
    pub b: Setting,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome_a: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome_b: Option<Outcome>,
}

/// Statistics of one state at one setting pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepQuantities {
    pub joint: JointDistribution,
    /// `P(A | a)`.
    pub marginal_a: OutcomeDistribution,
    /// `P(B | b)`.
    pub marginal_b: OutcomeDistribution,
    /// `P(B | a, b, A)` for `A = +1, −1`; `None` where `A` has zero
    /// probability.
    pub conditional_b: [Option<OutcomeDistribution>; 2],
    pub mean_a: f64,
    pub mean_b: f64,
    pub joint_expectation: f64,
    pub covariance: f64,
}

impl StepQuantities {
    pub fn compute(state: &QuantumState, a: &Setting, b: &Setting) -> Result<Self, PipelineError> {
        let joint = joint_probability(state, a, b)?;
        let o1 = Observable::spin(Particle::First, *a);
        let o2 = Observable::spin(Particle::Second, *b);
        Ok(StepQuantities {
            joint,
            marginal_a: OutcomeDistribution::new(joint.marginal_a(Outcome::Plus), joint.marginal_a(Outcome::Minus)),
            marginal_b: OutcomeDistribution::new(joint.marginal_b(Outcome::Plus), joint.marginal_b(Outcome::Minus)),
            conditional_b: Outcome::BOTH.map(|o| joint.conditional_b_given_a(o).ok()),
            mean_a: expectation(state, &o1)?,
            mean_b: expectation(state, &o2)?,
            joint_expectation: joint_expectation(state, &o1, &o2)?,
            covariance: covariance(state, a, b)?,
        })
    }

    /// Marginal entries equal to 0 or 1: outcomes the state predicts with
    /// certainty.
    pub fn deterministic_entries(&self) -> usize {
        self.marginal_a.deterministic_entries(tolerance::EXACT)
            + self.marginal_b.deterministic_entries(tolerance::EXACT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepFlags {
    /// Zero covariance at this setting pair.
    pub separable: bool,
    pub parameter_independence: Status,
    pub outcome_independence: Status,
    /// Whether any measurement has been performed yet.
    pub locality_applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub step: Step,
    pub inputs: StepInputs,
    pub state: QuantumState,
    pub quantities: StepQuantities,
    pub flags: StepFlags,
    pub deterministic_entries: usize,
    /// Grid verdicts on this step's state.
    pub verdicts: Vec<ConditionVerdict>,
    /// Step II: `a`-dependence of `⟨σ₂_b⟩` given `A′` over the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditioned_dependence: Option<ConditionedDependence>,
    /// Step III: both marginals are the registered outcomes with certainty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_check: Option<bool>,
}

fn grid_verdicts(state: &QuantumState, config: &CheckConfig) -> Result<Vec<ConditionVerdict>, PipelineError> {
    Ok(vec![
        check_no_signalling(Target::State(state), config)?,
        check_separability(Target::State(state), Level::Ensemble, config)?,
    ])
}

/// Step I: the singlet before any measurement.
pub fn run_step1(a: Setting, b: Setting, config: &CheckConfig) -> Result<StepReport, PipelineError> {
    let state = singlet_state();
    let quantities = StepQuantities::compute(&state, &a, &b)?;
    Ok(StepReport {
        step: Step::I,
        inputs: StepInputs {
            a,
            b,
            outcome_a: None,
            outcome_b: None,
        },
        flags: StepFlags {
            separable: quantities.covariance.abs() <= config.tolerance,
            parameter_independence: Status::NotApplicable,
            outcome_independence: Status::NotApplicable,
            locality_applicable: false,
        },
        deterministic_entries: quantities.deterministic_entries(),
        verdicts: grid_verdicts(&state, config)?,
        state,
        quantities,
        conditioned_dependence: None,
        delta_check: None,
    })
}

/// Step II: particle 1 measured along `a` gave `outcome_a`.
pub fn run_step2(
    a: Setting,
    outcome_a: Outcome,
    b: Setting,
    config: &CheckConfig,
) -> Result<StepReport, PipelineError> {
    let singlet = singlet_state();
    let state = reduce_state(&singlet, Particle::First, &a, outcome_a)?;
    let quantities = StepQuantities::compute(&state, &a, &b)?;
    let dependence = conditioned_marginal_dependence(&singlet, outcome_a, config)?;
    Ok(StepReport {
        step: Step::II,
        inputs: StepInputs {
            a,
            b,
            outcome_a: Some(outcome_a),
            outcome_b: None,
        },
        flags: StepFlags {
            separable: quantities.covariance.abs() <= config.tolerance,
            parameter_independence: if dependence.a_dependent {
                Status::Violated
            } else {
                Status::Satisfied
            },
            // A′ is a registered constant, not a distant outcome to depend on.
            outcome_independence: Status::Satisfied,
            locality_applicable: true,
        },
        deterministic_entries: quantities.deterministic_entries(),
        verdicts: grid_verdicts(&state, config)?,
        state,
        quantities,
        conditioned_dependence: Some(dependence),
        delta_check: None,
    })
}

/// Step III: particle 2 measured along `b` gave `outcome_b`.
pub fn run_step3(
    a: Setting,
    outcome_a: Outcome,
    b: Setting,
    outcome_b: Outcome,
    config: &CheckConfig,
) -> Result<StepReport, PipelineError> {
    let reduced = reduce_state(&singlet_state(), Particle::First, &a, outcome_a)?;
    let state = reduce_state(&reduced, Particle::Second, &b, outcome_b)?;
    let quantities = StepQuantities::compute(&state, &a, &b)?;
    let delta = quantities.marginal_a == OutcomeDistribution::delta(outcome_a)
        && quantities.marginal_b == OutcomeDistribution::delta(outcome_b);
    let delta_close = quantities.marginal_a.get(outcome_a) >= 1.0 - tolerance::EXACT
        && quantities.marginal_b.get(outcome_b) >= 1.0 - tolerance::EXACT;
    Ok(StepReport {
        step: Step::III,
        inputs: StepInputs {
            a,
            b,
            outcome_a: Some(outcome_a),
            outcome_b: Some(outcome_b),
        },
        flags: StepFlags {
            separable: quantities.covariance.abs() <= config.tolerance,
            parameter_independence: Status::Satisfied,
            outcome_independence: Status::Satisfied,
            locality_applicable: true,
        },
        deterministic_entries: quantities.deterministic_entries(),
        verdicts: grid_verdicts(&state, config)?,
        state,
        quantities,
        conditioned_dependence: None,
        delta_check: Some(delta || delta_close),
    })
}

/// `+1` with probability `p_plus`.
pub fn sample_outcome<R: Rng>(rng: &mut R, p_plus: f64) -> Outcome {
    if rng.random::<f64>() < p_plus {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
    /// Whether each outcome was drawn rather than supplied.
    pub sampled: [bool; 2],
    pub steps: [StepReport; 3],
}

/// All three steps. Missing outcomes are drawn from the quantum
/// probabilities with a generator seeded by `seed`.
pub fn run_pipeline(
    a: Setting,
    b: Setting,
    outcome_a: Option<Outcome>,
    outcome_b: Option<Outcome>,
    seed: u64,
    config: &CheckConfig,
) -> Result<PipelineReport, PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step1 = run_step1(a, b, config)?;
    let a_prime = match outcome_a {
        Some(o) => o,
        None => sample_outcome(&mut rng, step1.quantities.marginal_a.get(Outcome::Plus)),
    };
    let step2 = run_step2(a, a_prime, b, config)?;
    let b_prime = match outcome_b {
        Some(o) => o,
        None => sample_outcome(&mut rng, step2.quantities.marginal_b.get(Outcome::Plus)),
    };
    let step3 = run_step3(a, a_prime, b, b_prime, config)?;
    Ok(PipelineReport {
        seed,
        outcome_a: a_prime,
        outcome_b: b_prime,
        sampled: [outcome_a.is_none(), outcome_b.is_none()],
        steps: [step1, step2, step3],
    })
}

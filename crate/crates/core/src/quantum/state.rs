use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Vector4;
use serde::Serialize;

use super::operators::{eigenvector, projector};
use super::{JointDistribution, Observable, Outcome, OutcomeDistribution, Particle, QuantumError, Setting, C64};
use crate::tolerance;

/// Normalised two-qubit pure state.
///
/// Slot `2·i₁ + i₂` holds the amplitude on `|z,s₁⟩ ⊗ |z,s₂⟩` where index 0 is
/// `+1` and index 1 is `−1`. Amplitudes in any other product eigenbasis are
/// available through [`QuantumState::amplitude`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vector4<C64>,
}

const BASIS_LABELS: [&str; 4] = ["|z+>|z+>", "|z+>|z->", "|z->|z+>", "|z->|z->"];

impl QuantumState {
    pub fn new(amplitudes: [C64; 4]) -> Result<Self, QuantumError> {
        let state = QuantumState {
            amplitudes: Vector4::from(amplitudes),
        };
        state.validate()?;
        Ok(state)
    }

    /// `|a, A⟩₁ ⊗ |b, B⟩₂`.
    pub fn product(a: &Setting, outcome_a: Outcome, b: &Setting, outcome_b: Outcome) -> Self {
        let u = eigenvector(a, outcome_a);
        let v = eigenvector(b, outcome_b);
        QuantumState {
            amplitudes: Vector4::new(u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]),
        }
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        [
            self.amplitudes[0],
            self.amplitudes[1],
            self.amplitudes[2],
            self.amplitudes[3],
        ]
    }

    pub fn basis_labels() -> [&'static str; 4] {
        BASIS_LABELS
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        let norm_sq = self.norm_sq();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > tolerance::EXACT {
            return Err(QuantumError::InvalidState { norm_sq });
        }
        Ok(())
    }

    /// `(⟨a, A| ⊗ ⟨b, B|) |ψ⟩`.
    pub fn amplitude(&self, a: &Setting, outcome_a: Outcome, b: &Setting, outcome_b: Outcome) -> C64 {
        let bra = QuantumState::product(a, outcome_a, b, outcome_b);
        bra.amplitudes.dotc(&self.amplitudes)
    }

    /// Largest entrywise amplitude difference.
    pub fn max_amplitude_diff(&self, other: &QuantumState) -> f64 {
        (self.amplitudes - other.amplitudes)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `|⟨other|self⟩|²`; equals 1 for states equal up to global phase.
    pub fn fidelity(&self, other: &QuantumState) -> f64 {
        other.amplitudes.dotc(&self.amplitudes).norm_sqr()
    }

    fn expect(&self, op: &super::Op4) -> f64 {
        self.amplitudes.dotc(&(op * self.amplitudes)).re
    }
}

#[derive(Serialize)]
struct StateRepr {
    basis: [&'static str; 4],
    amplitudes: [[f64; 2]; 4],
}

impl Serialize for QuantumState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let a = self.amplitudes();
        StateRepr {
            basis: BASIS_LABELS,
            amplitudes: [
                [a[0].re, a[0].im],
                [a[1].re, a[1].im],
                [a[2].re, a[2].im],
                [a[3].re, a[3].im],
            ],
        }
        .serialize(serializer)
    }
}

/// `(|+,−⟩ − |−,+⟩)/√2`, identical in every planar or spatial reference basis.
pub fn singlet_state() -> QuantumState {
    QuantumState {
        amplitudes: Vector4::new(
            C64::new(0.0, 0.0),
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(-FRAC_1_SQRT_2, 0.0),
            C64::new(0.0, 0.0),
        ),
    }
}

/// `P(A, B | a, b, ψ) = |(⟨a,A| ⊗ ⟨b,B|)ψ|²`.
pub fn joint_probability(state: &QuantumState, a: &Setting, b: &Setting) -> Result<JointDistribution, QuantumError> {
    state.validate()?;
    let mut p = [[0.0; 2]; 2];
    for oa in Outcome::BOTH {
        for ob in Outcome::BOTH {
            p[oa.index()][ob.index()] = state.amplitude(a, oa, b, ob).norm_sqr();
        }
    }
    JointDistribution::new(p)
}

/// Probability of `outcome` for `particle` along `setting`, summed over the
/// other particle's outcomes.
pub fn marginal_probability(
    state: &QuantumState,
    particle: Particle,
    setting: &Setting,
    outcome: Outcome,
) -> Result<f64, QuantumError> {
    // The other particle's setting is irrelevant once summed over; use +z.
    let reference = Setting::from_radians(0.0);
    Ok(match particle {
        Particle::First => joint_probability(state, setting, &reference)?.marginal_a(outcome),
        Particle::Second => joint_probability(state, &reference, setting)?.marginal_b(outcome),
    })
}

/// `P(B | a, b, A, ψ)`.
pub fn conditional_probability(
    state: &QuantumState,
    a: &Setting,
    b: &Setting,
    given_a: Outcome,
) -> Result<OutcomeDistribution, QuantumError> {
    joint_probability(state, a, b)?.conditional_b_given_a(given_a)
}

pub fn expectation(state: &QuantumState, observable: &Observable) -> Result<f64, QuantumError> {
    state.validate()?;
    Ok(state.expect(&observable.matrix))
}

/// `⟨O₁ O₂⟩`; the observables must act on distinct particles or coincide.
pub fn joint_expectation(state: &QuantumState, first: &Observable, second: &Observable) -> Result<f64, QuantumError> {
    if first.particle == second.particle && first.setting != second.setting {
        return Err(QuantumError::UnsupportedPair);
    }
    state.validate()?;
    Ok(state.expect(&(first.matrix * second.matrix)))
}

/// `Cov(σ₁ₐ, σ₂_b) = ⟨σ₁ₐσ₂_b⟩ − ⟨σ₁ₐ⟩⟨σ₂_b⟩`.
pub fn covariance(state: &QuantumState, a: &Setting, b: &Setting) -> Result<f64, QuantumError> {
    let o1 = Observable::spin(Particle::First, *a);
    let o2 = Observable::spin(Particle::Second, *b);
    Ok(joint_expectation(state, &o1, &o2)? - expectation(state, &o1)? * expectation(state, &o2)?)
}

/// Projects onto the `outcome` eigenspace of `particle`'s spin along
/// `setting` and renormalises.
pub fn reduce_state(
    state: &QuantumState,
    particle: Particle,
    setting: &Setting,
    outcome: Outcome,
) -> Result<QuantumState, QuantumError> {
    state.validate()?;
    let projected = projector(particle, setting, outcome) * state.amplitudes;
    let probability = projected.norm_squared();
    if probability < tolerance::ZERO_PROBABILITY {
        return Err(QuantumError::Reduction {
            particle,
            outcome,
            probability,
        });
    }
    Ok(QuantumState {
        amplitudes: projected / C64::new(probability.sqrt(), 0.0),
    })
}

//! Exact two-qubit quantum calculus.
//!
//! States live in the computational product basis `|z,±⟩ ⊗ |z,±⟩`. Planar
//! settings rotate within the x–z plane, so the spin observable along a planar
//! angle `t` is `sin(t) σx + cos(t) σz`. Every operation here is a pure
//! function of its inputs.

mod distribution;
mod operators;
mod setting;
mod state;

pub use distribution::{JointDistribution, OutcomeDistribution};
pub use operators::{
    eigenvector, kron, pauli_x, pauli_y, pauli_z, spin_matrix, verify_operator_identities, IdentityReport, Observable,
    Op2, Op4, PauliSet,
};
pub use setting::{Outcome, Particle, Setting};
pub use state::{
    conditional_probability, covariance, expectation, joint_expectation, joint_probability, marginal_probability,
    reduce_state, singlet_state, QuantumState,
};

pub use nalgebra::Complex;

/// Complex double used for every amplitude and matrix entry.
pub type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantumError {
    #[error("invalid state: squared norm {norm_sq} differs from 1")]
    InvalidState { norm_sq: f64 },
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
    #[error("cannot condition on outcome {outcome} with probability {probability:e}")]
    Conditioning { outcome: Outcome, probability: f64 },
    #[error("cannot reduce on outcome {outcome} of particle {particle}: probability {probability:e}")]
    Reduction {
        particle: Particle,
        outcome: Outcome,
        probability: f64,
    },
    #[error("observables act on the same particle with different settings")]
    UnsupportedPair,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

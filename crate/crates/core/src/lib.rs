//! Verification workbench for the EPRB (Einstein–Podolsky–Rosen–Bohm) spin
//! experiment.
//!
//! The crate is organised bottom-up:
//!
//! - [`quantum`]: exact two-qubit calculus (singlet, projective reduction,
//!   joint/marginal/conditional statistics, Pauli operator identities).
//! - [`models`]: hidden-variable models with a structural measurement
//!   independence guarantee, plus the built-in model zoo.
//! - [`checks`]: parameter independence, outcome independence,
//!   factorizability, local causality, no-signalling, separability and CHSH.
//! - [`contextuality`]: exhaustive value-assignment enumerations.
//! - [`pipeline`]: the three measurement steps and the classification table.
//! - [`report`]: versioned JSON envelopes and flat CSV rows.

pub mod checks;
pub mod contextuality;
pub mod grid;
pub mod models;
pub mod pipeline;
pub mod quantum;
pub mod report;
pub mod tolerance;

pub use checks::{CheckConfig, CheckError, Condition, ConditionVerdict, Level, Target};
pub use models::{HvModel, ModelError};
pub use quantum::{JointDistribution, Outcome, Particle, QuantumError, QuantumState, Setting};

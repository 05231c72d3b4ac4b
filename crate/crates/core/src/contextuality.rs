//! Exhaustive value-assignment enumerations for the two-particle Mermin-style
//! argument built on `σ1x, σ1y, σ2x, σ2y`.
//!
//! The operator identity `σ1xσ2x·σ1yσ2y + σ1xσ2y·σ1yσ2x = 0` constrains any
//! assignment of ±1 values to the pair observables. Three readings are
//! enumerated:
//!
//! - a single non-contextual assignment to the four single observables with
//!   the product rule (never satisfiable),
//! - a direct assignment to the four pair observables (half satisfiable),
//! - two independent assignments, one per preparation (half satisfiable).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::quantum::{IdentityReport, Outcome, PauliSet};

/// Maximum number of satisfying assignments kept in a report.
pub const MAX_WITNESSES: usize = 8;

pub const SINGLE_OBSERVABLES: [&str; 4] = ["σ1x", "σ1y", "σ2x", "σ2y"];
pub const PAIR_OBSERVABLES: [&str; 4] = ["σ1xσ2x", "σ1yσ2y", "σ1xσ2y", "σ1yσ2x"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContextualityError {
    #[error(
        "operator identities fail: commutators {:e}, {:e}; anticombination {:e} (tolerance {:e})",
        .0.commutator_xx_yy, .0.commutator_xy_yx, .0.anticombination, .0.tolerance
    )]
    Identities(IdentityReport),
    #[error("unknown preparation mode {0:?} (expected shared or per-preparation)")]
    UnknownMode(String),
}

/// Values `ν` for `σ1x, σ1y, σ2x, σ2y`, in that order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueAssignment {
    pub values: [Outcome; 4],
    pub preparation_label: String,
}

impl ValueAssignment {
    pub fn new(values: [Outcome; 4], preparation_label: impl Into<String>) -> Self {
        ValueAssignment {
            values,
            preparation_label: preparation_label.into(),
        }
    }

    /// Pair values from the product rule `ν(σ1i σ2j) = ν(σ1i) ν(σ2j)`.
    pub fn pair_values(&self) -> PairAssignment {
        let [x1, y1, x2, y2] = self.values.map(Outcome::sign);
        PairAssignment {
            values: [x1 * x2, y1 * y2, x1 * y2, y1 * x2].map(|s| Outcome::of_sign(f64::from(s))),
        }
    }

    /// `ν(σ1x) ν(σ1y) ν(σ2x) ν(σ2y)`.
    pub fn four_fold(&self) -> i8 {
        self.values.iter().map(|v| v.sign()).product()
    }
}

/// Values for `σ1xσ2x, σ1yσ2y, σ1xσ2y, σ1yσ2x`, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairAssignment {
    pub values: [Outcome; 4],
}

impl PairAssignment {
    /// `(ν(σ1xσ2x) ν(σ1yσ2y), ν(σ1xσ2y) ν(σ1yσ2x))`.
    pub fn terms(&self) -> (i8, i8) {
        let [xx, yy, xy, yx] = self.values.map(Outcome::sign);
        (xx * yy, xy * yx)
    }

    pub fn sum(&self) -> i8 {
        let (t1, t2) = self.terms();
        t1 + t2
    }

    pub fn satisfies(&self) -> bool {
        self.sum() == 0
    }
}

/// All `2⁴` value tuples, lexicographic with `+1` before `−1`.
pub fn all_tuples() -> impl Iterator<Item = [Outcome; 4]> {
    (0..16u8).map(|bits| {
        std::array::from_fn(|i| {
            if bits >> (3 - i) & 1 == 0 {
                Outcome::Plus
            } else {
                Outcome::Minus
            }
        })
    })
}

/// How preparations share value assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreparationMode {
    /// One assignment for every preparation: the non-contextual case.
    Shared,
    /// One assignment per preparation, product rule within each.
    PerPreparation,
}

impl fmt::Display for PreparationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreparationMode::Shared => "shared",
            PreparationMode::PerPreparation => "per-preparation",
        })
    }
}

impl FromStr for PreparationMode {
    type Err = ContextualityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "shared" | "noncontextual" | "non-contextual" => Ok(PreparationMode::Shared),
            "per-preparation" | "local-contextual" | "contextual" => Ok(PreparationMode::PerPreparation),
            other => Err(ContextualityError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Enumeration {
    Noncontextual,
    PairLevel,
    LocalContextual,
}

impl fmt::Display for Enumeration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Enumeration::Noncontextual => "noncontextual",
            Enumeration::PairLevel => "pair-level",
            Enumeration::LocalContextual => "local-contextual",
        })
    }
}

/// A satisfying assignment found by an enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AssignmentWitness {
    Single {
        nu: ValueAssignment,
    },
    Pair {
        values: PairAssignment,
    },
    Prepared {
        nu: ValueAssignment,
        nu_prime: ValueAssignment,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub enumeration: Enumeration,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preparation_mode: Option<PreparationMode>,
    pub total: usize,
    pub satisfying: usize,
    /// First satisfying assignments in enumeration order.
    pub witnesses: Vec<AssignmentWitness>,
    /// For the product-rule enumeration: whether the two factorised terms
    /// agreed for every assignment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms_always_equal: Option<bool>,
}

impl EnumerationReport {
    pub fn summary(&self) -> String {
        format!("{}: {}/{}", self.enumeration, self.satisfying, self.total)
    }
}

/// Single shared assignment with the product rule, against the identity.
pub fn enumerate_noncontextual_assignments() -> EnumerationReport {
    let mut satisfying = 0;
    let mut witnesses = Vec::new();
    let mut equal = true;
    let mut total = 0;
    for values in all_tuples() {
        total += 1;
        let nu = ValueAssignment::new(values, "p");
        let pairs = nu.pair_values();
        let (t1, t2) = pairs.terms();
        equal &= t1 == t2;
        if pairs.satisfies() {
            satisfying += 1;
            if witnesses.len() < MAX_WITNESSES {
                witnesses.push(AssignmentWitness::Single { nu });
            }
        }
    }
    EnumerationReport {
        enumeration: Enumeration::Noncontextual,
        preparation_mode: Some(PreparationMode::Shared),
        total,
        satisfying,
        witnesses,
        terms_always_equal: Some(equal),
    }
}

/// Direct assignments to the four pair observables.
pub fn enumerate_pair_assignments() -> EnumerationReport {
    let mut satisfying = 0;
    let mut witnesses = Vec::new();
    let mut total = 0;
    for values in all_tuples() {
        total += 1;
        let pa = PairAssignment { values };
        if pa.satisfies() {
            satisfying += 1;
            if witnesses.len() < MAX_WITNESSES {
                witnesses.push(AssignmentWitness::Pair { values: pa });
            }
        }
    }
    EnumerationReport {
        enumeration: Enumeration::PairLevel,
        preparation_mode: None,
        total,
        satisfying,
        witnesses,
        terms_always_equal: None,
    }
}

/// Independent assignments `ν` (preparation `φ`) and `ν′` (preparation `φ′`):
/// one four-fold product from each must cancel.
pub fn enumerate_local_contextual() -> EnumerationReport {
    let mut satisfying = 0;
    let mut witnesses = Vec::new();
    let mut total = 0;
    for v in all_tuples() {
        for w in all_tuples() {
            total += 1;
            let nu = ValueAssignment::new(v, "φ");
            let nu_prime = ValueAssignment::new(w, "φ′");
            if nu.four_fold() + nu_prime.four_fold() == 0 {
                satisfying += 1;
                if witnesses.len() < MAX_WITNESSES {
                    witnesses.push(AssignmentWitness::Prepared { nu, nu_prime });
                }
            }
        }
    }
    EnumerationReport {
        enumeration: Enumeration::LocalContextual,
        preparation_mode: Some(PreparationMode::PerPreparation),
        total,
        satisfying,
        witnesses,
        terms_always_equal: None,
    }
}

/// The enumeration that `mode` reduces to.
pub fn preparation_context_mode(mode: PreparationMode) -> EnumerationReport {
    match mode {
        PreparationMode::Shared => enumerate_noncontextual_assignments(),
        PreparationMode::PerPreparation => enumerate_local_contextual(),
    }
}

/// Operator identities followed by all three enumerations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualityReport {
    pub identities: IdentityReport,
    pub noncontextual: EnumerationReport,
    pub pair_level: EnumerationReport,
    pub local_contextual: EnumerationReport,
}

impl ContextualityReport {
    pub fn enumerations(&self) -> [&EnumerationReport; 3] {
        [&self.noncontextual, &self.pair_level, &self.local_contextual]
    }
}

/// Runs the enumerations once `paulis` pass the operator identities.
pub fn analyse(paulis: &PauliSet) -> Result<ContextualityReport, ContextualityError> {
    let identities = paulis.verify();
    if !identities.passed {
        return Err(ContextualityError::Identities(identities));
    }
    Ok(ContextualityReport {
        identities,
        noncontextual: enumerate_noncontextual_assignments(),
        pair_level: enumerate_pair_assignments(),
        local_contextual: enumerate_local_contextual(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Outcome::{Minus as M, Plus as P};

    #[test]
    fn counts() {
        let r = analyse(&PauliSet::default()).unwrap();
        assert_eq!((r.noncontextual.satisfying, r.noncontextual.total), (0, 16));
        assert_eq!((r.pair_level.satisfying, r.pair_level.total), (8, 16));
        assert_eq!((r.local_contextual.satisfying, r.local_contextual.total), (128, 256));
        assert_eq!(r.noncontextual.terms_always_equal, Some(true));
        assert!(r.noncontextual.witnesses.is_empty());
        assert_eq!(r.pair_level.witnesses.len(), MAX_WITNESSES);
    }

    #[test]
    fn lexicographic_order() {
        let t: Vec<_> = all_tuples().collect();
        assert_eq!(t[0], [P, P, P, P]);
        assert_eq!(t[1], [P, P, P, M]);
        assert_eq!(t[15], [M, M, M, M]);
    }

    #[test]
    fn spot_values() {
        assert_eq!(ValueAssignment::new([P; 4], "p").pair_values().sum(), 2);
        assert!(PairAssignment { values: [P, P, P, M] }.satisfies());
        assert!(!PairAssignment { values: [P; 4] }.satisfies());
        let nu = ValueAssignment::new([P; 4], "φ");
        let nu_prime = ValueAssignment::new([M, P, P, P], "φ′");
        assert_eq!(nu.four_fold() + nu_prime.four_fold(), 0);
        let r = enumerate_local_contextual();
        assert_eq!(
            r.witnesses[0],
            AssignmentWitness::Prepared {
                nu,
                nu_prime: ValueAssignment::new([P, P, P, M], "φ′")
            }
        );
        for v in all_tuples() {
            let nu = ValueAssignment::new(v, "φ");
            assert_ne!(nu.four_fold() + nu.four_fold(), 0);
        }
    }

    #[test]
    fn perturbed_identities_block_enumeration() {
        assert!(matches!(
            analyse(&PauliSet::perturbed(1e-6)),
            Err(ContextualityError::Identities(_))
        ));
    }

    #[test]
    fn mode_parsing_and_round_trip() {
        assert_eq!(
            "local-contextual".parse::<PreparationMode>().unwrap(),
            PreparationMode::PerPreparation
        );
        assert_eq!("Shared".parse::<PreparationMode>().unwrap(), PreparationMode::Shared);
        assert!("mixed".parse::<PreparationMode>().is_err());
        for mode in [PreparationMode::Shared, PreparationMode::PerPreparation] {
            let r = preparation_context_mode(mode);
            let back: EnumerationReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
            assert_eq!(back.preparation_mode, Some(mode));
            assert_eq!(back, r);
        }
        assert_eq!(preparation_context_mode(PreparationMode::Shared).satisfying, 0);
        assert!(preparation_context_mode(PreparationMode::PerPreparation).satisfying > 0);
    }
}

use serde::{Deserialize, Serialize};

use super::{Outcome, QuantumError};
use crate::tolerance;

/// Probabilities over `(A, B) ∈ {±1}²`, indexed `p[A][B]` with slot 0 for
/// `+1` and slot 1 for `−1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")]
pub struct JointDistribution {
    p: [[f64; 2]; 2],
}

impl TryFrom<[[f64; 2]; 2]> for JointDistribution {
    type Error = QuantumError;

    fn try_from(p: [[f64; 2]; 2]) -> Result<Self, Self::Error> {
        JointDistribution::new(p)
    }
}

impl From<JointDistribution> for [[f64; 2]; 2] {
    fn from(d: JointDistribution) -> Self {
        d.p
    }
}

impl JointDistribution {
    /// Validates entries in `[0, 1]` and total mass 1, both within
    /// [`tolerance::EXACT`].
    pub fn new(p: [[f64; 2]; 2]) -> Result<Self, QuantumError> {
        let d = JointDistribution { p };
        d.validate(tolerance::EXACT)?;
        Ok(d)
    }

    /// Builds without validation; for accumulated Monte Carlo estimates that
    /// are normalised only up to rounding.
    pub(crate) fn from_raw(p: [[f64; 2]; 2]) -> Self {
        JointDistribution { p }
    }

    /// Product of independent marginals given as `P(A=+1)` and `P(B=+1)`.
    pub fn product(p_a_plus: f64, p_b_plus: f64) -> Self {
        let pa = [p_a_plus, 1.0 - p_a_plus];
        let pb = [p_b_plus, 1.0 - p_b_plus];
        JointDistribution {
            p: [[pa[0] * pb[0], pa[0] * pb[1]], [pa[1] * pb[0], pa[1] * pb[1]]],
        }
    }

    /// Point mass on `(a, b)`.
    pub fn deterministic(a: Outcome, b: Outcome) -> Self {
        let mut p = [[0.0; 2]; 2];
        p[a.index()][b.index()] = 1.0;
        JointDistribution { p }
    }

    pub fn validate(&self, tol: f64) -> Result<(), QuantumError> {
        let mut total = 0.0;
        for row in &self.p {
            for &x in row {
                if !x.is_finite() || x < -tol || x > 1.0 + tol {
                    return Err(QuantumError::InvalidDistribution(format!("entry {x} outside [0, 1]")));
                }
                total += x;
            }
        }
        if (total - 1.0).abs() > tol {
            return Err(QuantumError::InvalidDistribution(format!(
                "total mass {total} differs from 1"
            )));
        }
        Ok(())
    }

    pub fn get(&self, a: Outcome, b: Outcome) -> f64 {
        self.p[a.index()][b.index()]
    }

    pub fn table(&self) -> [[f64; 2]; 2] {
        self.p
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    pub fn marginal_a(&self, a: Outcome) -> f64 {
        self.p[a.index()][0] + self.p[a.index()][1]
    }

    pub fn marginal_b(&self, b: Outcome) -> f64 {
        self.p[0][b.index()] + self.p[1][b.index()]
    }

    /// `Σ A·B·p[A][B]`.
    pub fn correlation(&self) -> f64 {
        self.p[0][0] - self.p[0][1] - self.p[1][0] + self.p[1][1]
    }

    pub fn mean_a(&self) -> f64 {
        self.marginal_a(Outcome::Plus) - self.marginal_a(Outcome::Minus)
    }

    pub fn mean_b(&self) -> f64 {
        self.marginal_b(Outcome::Plus) - self.marginal_b(Outcome::Minus)
    }

    /// `⟨AB⟩ − ⟨A⟩⟨B⟩`.
    pub fn covariance(&self) -> f64 {
        self.correlation() - self.mean_a() * self.mean_b()
    }

    /// `P(B | A)`; fails when `P(A)` is below the zero-probability threshold.
    pub fn conditional_b_given_a(&self, a: Outcome) -> Result<OutcomeDistribution, QuantumError> {
        let pa = self.marginal_a(a);
        if pa < tolerance::ZERO_PROBABILITY {
            return Err(QuantumError::Conditioning {
                outcome: a,
                probability: pa,
            });
        }
        Ok(OutcomeDistribution::new(
            self.p[a.index()][0] / pa,
            self.p[a.index()][1] / pa,
        ))
    }

    /// `P(A | B)`; fails when `P(B)` is below the zero-probability threshold.
    pub fn conditional_a_given_b(&self, b: Outcome) -> Result<OutcomeDistribution, QuantumError> {
        let pb = self.marginal_b(b);
        if pb < tolerance::ZERO_PROBABILITY {
            return Err(QuantumError::Conditioning {
                outcome: b,
                probability: pb,
            });
        }
        Ok(OutcomeDistribution::new(
            self.p[0][b.index()] / pb,
            self.p[1][b.index()] / pb,
        ))
    }

    /// Number of entries that are exactly 0 or 1 within `tol`.
    pub fn deterministic_entries(&self, tol: f64) -> usize {
        self.p
            .iter()
            .flatten()
            .filter(|&&x| x.abs() <= tol || (x - 1.0).abs() <= tol)
            .count()
    }

    pub fn max_abs_diff(&self, other: &JointDistribution) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.p[i][j] - other.p[i][j]).abs());
            }
        }
        m
    }
}

/// Distribution of a single `±1` outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub plus: f64,
    pub minus: f64,
}

impl OutcomeDistribution {
    pub fn new(plus: f64, minus: f64) -> Self {
        OutcomeDistribution { plus, minus }
    }

    pub fn delta(outcome: Outcome) -> Self {
        match outcome {
            Outcome::Plus => OutcomeDistribution::new(1.0, 0.0),
            Outcome::Minus => OutcomeDistribution::new(0.0, 1.0),
        }
    }

    pub fn get(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Plus => self.plus,
            Outcome::Minus => self.minus,
        }
    }

    pub fn mean(&self) -> f64 {
        self.plus - self.minus
    }

    pub fn deterministic_entries(&self, tol: f64) -> usize {
        [self.plus, self.minus]
            .iter()
            .filter(|&&x| x.abs() <= tol || (x - 1.0).abs() <= tol)
            .count()
    }
}

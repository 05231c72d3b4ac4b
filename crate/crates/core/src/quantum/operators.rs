use nalgebra::{Matrix2, Matrix4, Vector2};
use serde::{Deserialize, Serialize};

use super::{Outcome, Particle, Setting, C64};
use crate::tolerance;

pub type Op2 = Matrix2<C64>;
pub type Op4 = Matrix4<C64>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> Op2 {
    Op2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn pauli_y() -> Op2 {
    Op2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn pauli_z() -> Op2 {
    Op2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// `n·σ` for the setting's unit direction `n`.
pub fn spin_matrix(setting: &Setting) -> Op2 {
    let [x, y, z] = setting.direction();
    pauli_x() * c(x, 0.0) + pauli_y() * c(y, 0.0) + pauli_z() * c(z, 0.0)
}

/// Kronecker product `left ⊗ right`; particle 1 is the left factor.
pub fn kron(left: &Op2, right: &Op2) -> Op4 {
    Op4::from_fn(|r, col| left[(r / 2, col / 2)] * right[(r % 2, col % 2)])
}

/// Lifts a single-particle operator to the two-particle space.
pub(crate) fn lift(particle: Particle, op: &Op2) -> Op4 {
    match particle {
        Particle::First => kron(op, &Op2::identity()),
        Particle::Second => kron(&Op2::identity(), op),
    }
}

/// Single-particle projector onto the `outcome` eigenspace of `n·σ`.
pub(crate) fn projector2(setting: &Setting, outcome: Outcome) -> Op2 {
    (Op2::identity() + spin_matrix(setting) * c(outcome.value(), 0.0)) * c(0.5, 0.0)
}

pub(crate) fn projector(particle: Particle, setting: &Setting, outcome: Outcome) -> Op4 {
    lift(particle, &projector2(setting, outcome))
}

/// Eigenvector `|n, outcome⟩` of `n·σ`.
///
/// Planar settings use the real rotation `(cos t/2, sin t/2)`,
/// `(−sin t/2, cos t/2)`; 3D axes use the standard polar parametrisation.
pub fn eigenvector(setting: &Setting, outcome: Outcome) -> Vector2<C64> {
    let (half, phase) = match setting.axis() {
        None => (setting.angle() / 2.0, C64::new(1.0, 0.0)),
        Some([x, y, z]) => (z.clamp(-1.0, 1.0).acos() / 2.0, C64::from_polar(1.0, y.atan2(x))),
    };
    let (s, co) = half.sin_cos();
    match outcome {
        Outcome::Plus => Vector2::new(c(co, 0.0), phase * s),
        Outcome::Minus => Vector2::new(-phase.conj() * s, c(co, 0.0)),
    }
}

fn max_entry(m: &Op4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spin observable `σ_{i n}` as a 4×4 operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub particle: Particle,
    pub setting: Setting,
    pub matrix: Op4,
}

impl Observable {
    pub fn spin(particle: Particle, setting: Setting) -> Self {
        Observable {
            particle,
            setting,
            matrix: lift(particle, &spin_matrix(&setting)),
        }
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_entry(&(self.matrix - self.matrix.adjoint()))
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = self.matrix.symmetric_eigen();
        let mut v = [0.0; 4];
        for (slot, e) in v.iter_mut().zip(eig.eigenvalues.iter()) {
            *slot = *e;
        }
        v.sort_by(f64::total_cmp);
        v
    }
}

/// The four single-particle Paulis `σ1x, σ1y, σ2x, σ2y` used by the
/// operator identities. Kept as data so that perturbed sets can be checked.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSet {
    pub x1: Op4,
    pub y1: Op4,
    pub x2: Op4,
    pub y2: Op4,
}

impl Default for PauliSet {
    fn default() -> Self {
        PauliSet {
            x1: lift(Particle::First, &pauli_x()),
            y1: lift(Particle::First, &pauli_y()),
            x2: lift(Particle::Second, &pauli_x()),
            y2: lift(Particle::Second, &pauli_y()),
        }
    }
}

impl PauliSet {
    /// Adds `epsilon` to the top-left entry of `σ1x`.
    pub fn perturbed(epsilon: f64) -> Self {
        let mut set = PauliSet::default();
        set.x1[(0, 0)] += c(epsilon, 0.0);
        set
    }

    /// `σ1x σ2x σ1y σ2y`.
    pub fn four_fold_xxyy(&self) -> Op4 {
        self.x1 * self.x2 * self.y1 * self.y2
    }

    /// `σ1x σ2y σ1y σ2x`.
    pub fn four_fold_xyyx(&self) -> Op4 {
        self.x1 * self.y2 * self.y1 * self.x2
    }

    pub fn verify(&self) -> IdentityReport {
        let xx = self.x1 * self.x2;
        let yy = self.y1 * self.y2;
        let xy = self.x1 * self.y2;
        let yx = self.y1 * self.x2;
        let commutator_xx_yy = max_entry(&(xx * yy - yy * xx));
        let commutator_xy_yx = max_entry(&(xy * yx - yx * xy));
        let anticombination = max_entry(&(self.four_fold_xxyy() + self.four_fold_xyyx()));
        let tol = tolerance::EXACT;
        IdentityReport {
            commutator_xx_yy,
            commutator_xy_yx,
            anticombination,
            tolerance: tol,
            passed: commutator_xx_yy < tol && commutator_xy_yx < tol && anticombination < tol,
        }
    }
}

/// Max-entry norms of the two pair commutators and of the sum of the two
/// four-fold products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub commutator_xx_yy: f64,
    pub commutator_xy_yx: f64,
    pub anticombination: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn verify_operator_identities() -> IdentityReport {
    PauliSet::default().verify()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_identities_hold() {
        let report = verify_operator_identities();
        assert!(report.passed, "{report:?}");
        assert!(report.commutator_xx_yy < 1e-12);
        assert!(report.anticombination < 1e-12);
    }

    #[test]
    fn perturbation_breaks_identities() {
        let report = PauliSet::perturbed(1e-3).verify();
        assert!(!report.passed);
    }

    #[test]
    fn four_fold_product_has_unit_eigenvalues() {
        // σ1xσ2xσ1yσ2y = (σxσy)⊗(σxσy) = (iσz)⊗(iσz) = −σz⊗σz
        let m = PauliSet::default().four_fold_xxyy();
        let expected = -kron(&pauli_z(), &pauli_z());
        assert!(max_entry(&(m - expected)) < 1e-15);
        let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (got, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn observables_are_hermitian_with_degenerate_unit_spectrum() {
        for deg in [0.0, 33.0, 90.0, 211.0] {
            for particle in [Particle::First, Particle::Second] {
                let obs = Observable::spin(particle, Setting::from_degrees(deg));
                assert!(obs.hermiticity_error() < 1e-12);
                let ev = obs.eigenvalues();
                for (got, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
                    assert!((got - want).abs() < 1e-12, "{ev:?}");
                }
            }
        }
        let spatial = Setting::from_axis([1.0, 2.0, -0.5]).unwrap();
        let obs = Observable::spin(Particle::Second, spatial);
        assert!(obs.hermiticity_error() < 1e-12);
    }

    #[test]
    fn eigenvectors_match_spin_matrix() {
        let settings = [
            Setting::from_degrees(0.0),
            Setting::from_degrees(250.0),
            Setting::from_axis([0.3, -0.7, 0.2]).unwrap(),
        ];
        for s in settings {
            let m = spin_matrix(&s);
            for o in Outcome::BOTH {
                let v = eigenvector(&s, o);
                let residual = m * v - v * c(o.value(), 0.0);
                assert!(residual.norm() < 1e-12);
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}

use std::collections::HashMap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::{CheckConfig, CheckError, Target};
use crate::grid::SettingsGrid;
use crate::models::{EnsembleJoint, ErrorKind};
use crate::quantum::{joint_probability, Setting};

pub const CLASSICAL_BOUND: f64 = 2.0;
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;

/// `(a, a′, b, b′) = (0°, 90°, 45°, 135°)`.
pub fn standard_quadruple() -> [Setting; 4] {
    [0.0, 90.0, 45.0, 135.0].map(Setting::from_degrees)
}

/// `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    /// `[a, a′, b, b′]`.
    pub settings: [Setting; 4],
    /// `[E(a,b), E(a,b′), E(a′,b), E(a′,b′)]`.
    pub correlators: [f64; 4],
    pub s: f64,
    pub abs_s: f64,
    /// Standard error of `S` (zero for exact targets).
    pub std_error: f64,
    /// Acceptance band applied to both bound flags.
    pub band: f64,
    pub within_classical: bool,
    pub within_quantum: bool,
}

impl ChshResult {
    fn new(settings: [Setting; 4], correlators: [f64; 4], s: f64, std_error: f64, band: f64) -> Self {
        ChshResult {
            settings,
            correlators,
            s,
            abs_s: s.abs(),
            std_error,
            band,
            within_classical: s.abs() <= CLASSICAL_BOUND + band,
            within_quantum: s.abs() <= TSIRELSON_BOUND + band,
        }
    }

    pub fn recomputed_s(&self) -> f64 {
        combine(&self.correlators)
    }
}

fn combine(e: &[f64; 4]) -> f64 {
    e[0] - e[1] + e[2] + e[3]
}

fn check_distinct(s: &[Setting; 4]) -> Result<(), CheckError> {
    let [a, a2, b, b2] = s;
    if a.key() == a2.key() || b.key() == b2.key() {
        return Err(CheckError::Settings(format!(
            "CHSH needs a ≠ a′ and b ≠ b′, got a={a}, a′={a2}, b={b}, b′={b2}"
        )));
    }
    Ok(())
}

pub fn chsh_value(
    target: Target<'_>,
    a: Setting,
    a_prime: Setting,
    b: Setting,
    b_prime: Setting,
    config: &CheckConfig,
) -> Result<ChshResult, CheckError> {
    let settings = [a, a_prime, b, b_prime];
    check_distinct(&settings)?;
    let pairs = [(a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime)];
    match target {
        Target::State(state) => {
            let mut e = [0.0; 4];
            for (slot, (x, y)) in e.iter_mut().zip(&pairs) {
                *slot = joint_probability(state, x, y)?.correlation();
            }
            Ok(ChshResult::new(settings, e, combine(&e), 0.0, config.tolerance))
        }
        Target::Model(model) => {
            // The fifth output is S itself, so its error keeps the covariance
            // between the four correlators.
            let est = model.lambda_space().integrate(5, |lambda, out| {
                for (k, (x, y)) in pairs.iter().enumerate() {
                    out[k] = model.joint_at(x, y, lambda)?.correlation();
                }
                out[4] = out[0] - out[1] + out[2] + out[3];
                Ok(())
            })?;
            let e = [est.mean[0], est.mean[1], est.mean[2], est.mean[3]];
            let (err, band) = match est.kind {
                ErrorKind::Exact => (0.0, config.tolerance),
                ErrorKind::Quadrature => {
                    let err = est.error[..4].iter().sum::<f64>();
                    (err, config.tolerance + err)
                }
                ErrorKind::MonteCarlo => (est.error[4], config.threshold(est.error[4])),
            };
            Ok(ChshResult::new(settings, e, combine(&e), err, band))
        }
    }
}

/// Maximum `|S|` over every quadruple drawn from a grid of angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshScan {
    pub angles: Vec<Setting>,
    pub quadruples: usize,
    pub max_abs_s: f64,
    pub argmax: ChshResult,
    /// Largest correlator error on the scan grid.
    pub max_correlator_error: f64,
}

impl ChshScan {
    pub fn within_classical(&self) -> bool {
        self.argmax.within_classical
    }

    pub fn within_quantum(&self) -> bool {
        self.argmax.within_quantum
    }
}

/// Scans all quadruples of planar angles `0, step, 2·step, … < 360°`.
pub fn chsh_scan(target: Target<'_>, step_degrees: f64, config: &CheckConfig) -> Result<ChshScan, CheckError> {
    if !step_degrees.is_finite() || step_degrees <= 0.0 || step_degrees > 180.0 {
        return Err(CheckError::Settings(format!(
            "scan step must be in (0, 180] degrees, got {step_degrees}"
        )));
    }
    let count = (360.0 / step_degrees - 1e-9).ceil() as usize;
    let angles: Vec<Setting> = (0..count)
        .map(|i| Setting::from_degrees(i as f64 * step_degrees))
        .collect();
    let grid = SettingsGrid::cartesian(&angles, &angles)?;
    chsh_scan_grid(target, &grid, config)
}

/// Scans every quadruple whose four pairs all lie on `grid`.
///
/// For Monte Carlo targets the error of `S` at the maximiser is the root sum
/// of squares of its correlator errors.
pub fn chsh_scan_grid(target: Target<'_>, grid: &SettingsGrid, config: &CheckConfig) -> Result<ChshScan, CheckError> {
    let pairs = grid.pairs();
    let (values, errors, kind): (Vec<f64>, Vec<f64>, ErrorKind) = match target {
        Target::State(state) => (
            pairs
                .iter()
                .map(|(a, b)| Ok(joint_probability(state, a, b)?.correlation()))
                .collect::<Result<_, CheckError>>()?,
            vec![0.0; pairs.len()],
            ErrorKind::Exact,
        ),
        Target::Model(model) => {
            let joints = model.ensemble_many(pairs)?;
            return scan_from_joints(grid, &joints, config);
        }
    };
    scan_correlators(grid, &values, &errors, kind, config)
}

/// Scan from precomputed ensemble joints, one per grid pair.
pub(crate) fn scan_from_joints(
    grid: &SettingsGrid,
    joints: &[EnsembleJoint],
    config: &CheckConfig,
) -> Result<ChshScan, CheckError> {
    let kind = joints.first().map_or(ErrorKind::Exact, |j| j.kind);
    let values: Vec<f64> = joints.iter().map(|j| j.correlation).collect();
    let errors: Vec<f64> = joints.iter().map(|j| j.correlation_error).collect();
    scan_correlators(grid, &values, &errors, kind, config)
}

fn scan_correlators(
    grid: &SettingsGrid,
    values: &[f64],
    errors: &[f64],
    kind: ErrorKind,
    config: &CheckConfig,
) -> Result<ChshScan, CheckError> {
    let pairs = grid.pairs();
    let index: HashMap<_, usize> = pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| ((a.key(), b.key()), i))
        .collect();
    let a_values = grid.a_settings();
    let b_values = grid.b_settings();

    let mut best: Option<([Setting; 4], [usize; 4], f64)> = None;
    let mut quadruples = 0;
    let lookup = |x: &Setting, y: &Setting| index.get(&(x.key(), y.key())).copied();
    for (i, a) in a_values.iter().enumerate() {
        for a2 in &a_values[i + 1..] {
            for (j, b) in b_values.iter().enumerate() {
                for b2 in &b_values[j + 1..] {
                    let (Some(k0), Some(k1), Some(k2), Some(k3)) =
                        (lookup(a, b), lookup(a, b2), lookup(a2, b), lookup(a2, b2))
                    else {
                        continue;
                    };
                    // The four placements of the minus sign.
                    for (settings, k) in [
                        ([*a, *a2, *b, *b2], [k0, k1, k2, k3]),
                        ([*a, *a2, *b2, *b], [k1, k0, k3, k2]),
                        ([*a2, *a, *b, *b2], [k2, k3, k0, k1]),
                        ([*a2, *a, *b2, *b], [k3, k2, k1, k0]),
                    ] {
                        quadruples += 1;
                        let s = combine(&k.map(|x| values[x]));
                        if best.as_ref().is_none_or(|(_, _, m)| s.abs() > m.abs()) {
                            best = Some((settings, k, s));
                        }
                    }
                }
            }
        }
    }
    let (settings, k, s) =
        best.ok_or_else(|| CheckError::Settings("grid contains no complete CHSH quadruple".to_string()))?;
    let err = k.iter().map(|&x| errors[x].powi(2)).sum::<f64>().sqrt();
    let band = match kind {
        ErrorKind::Exact => config.tolerance,
        ErrorKind::Quadrature => config.tolerance + k.iter().map(|&x| errors[x]).sum::<f64>(),
        ErrorKind::MonteCarlo => config.threshold(err),
    };
    let mut angles = a_values;
    for b in b_values {
        if !angles.iter().any(|x| x.key() == b.key()) {
            angles.push(b);
        }
    }
    Ok(ChshScan {
        angles,
        quadruples,
        max_abs_s: s.abs(),
        argmax: ChshResult::new(settings, k.map(|x| values[x]), s, err, band),
        max_correlator_error: errors.iter().copied().fold(0.0, f64::max),
    })
}

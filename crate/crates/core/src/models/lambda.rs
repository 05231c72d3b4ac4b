use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::tolerance;

/// A hidden-variable value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lambda {
    Index(usize),
    Scalar(f64),
    Vector([f64; 3]),
}

impl Lambda {
    pub fn scalar(&self) -> Option<f64> {
        match *self {
            Lambda::Scalar(x) => Some(x),
            Lambda::Index(i) => Some(i as f64),
            Lambda::Vector(_) => None,
        }
    }

    pub fn vector(&self) -> Option<[f64; 3]> {
        match *self {
            Lambda::Vector(v) => Some(v),
            _ => None,
        }
    }
}

pub type WeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Where λ lives and how `∫ ρ(λ) (·) dλ` is evaluated.
#[derive(Clone)]
pub enum LambdaSpace {
    /// Exact enumeration over weighted points.
    Finite { points: Vec<Lambda>, weights: Vec<f64> },
    /// `[lo, hi]` with density `ρ`, midpoint rule with `nodes` nodes.
    Interval {
        lo: f64,
        hi: f64,
        nodes: usize,
        density: WeightFn,
    },
    /// Uniform on the unit sphere, seeded Monte Carlo.
    Sphere { samples: usize, seed: u64 },
}

impl fmt::Debug for LambdaSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSpace::Finite { points, weights } => f
                .debug_struct("Finite")
                .field("points", points)
                .field("weights", weights)
                .finish(),
            LambdaSpace::Interval { lo, hi, nodes, .. } => f
                .debug_struct("Interval")
                .field("lo", lo)
                .field("hi", hi)
                .field("nodes", nodes)
                .finish_non_exhaustive(),
            LambdaSpace::Sphere { samples, seed } => f
                .debug_struct("Sphere")
                .field("samples", samples)
                .field("seed", seed)
                .finish(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Exact,
    Quadrature,
    MonteCarlo,
}

/// Integrated means with per-output error.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: Vec<f64>,
    pub error: Vec<f64>,
    pub kind: ErrorKind,
    pub evaluations: usize,
}

/// Samples per Monte Carlo chunk. Chunk `c` draws from stream `c` of the
/// seeded generator, so estimates do not depend on the worker count.
const CHUNK: usize = 1 << 14;

impl LambdaSpace {
    pub fn finite(points: Vec<Lambda>, weights: Vec<f64>) -> Result<Self, ModelError> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(ModelError::InvalidSpace(format!(
                "{} points with {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(ModelError::InvalidSpace(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tolerance::ANALYTIC {
            return Err(ModelError::InvalidSpace(format!("weights sum to {total}")));
        }
        Ok(LambdaSpace::Finite { points, weights })
    }

    pub fn interval<F>(lo: f64, hi: f64, nodes: usize, density: F) -> Result<Self, ModelError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || nodes < 2 {
            return Err(ModelError::InvalidSpace(format!(
                "interval [{lo}, {hi}] with {nodes} nodes"
            )));
        }
        let space = LambdaSpace::Interval {
            lo,
            hi,
            nodes,
            density: Arc::new(density),
        };
        let mut negative = None;
        for (lambda, w) in space.midpoints(nodes) {
            if w.is_nan() || w < 0.0 {
                negative = Some(lambda);
            }
        }
        if let Some(l) = negative {
            return Err(ModelError::InvalidSpace(format!("density negative at {l:?}")));
        }
        let total = space.total_weight();
        if (total - 1.0).abs() > tolerance::ANALYTIC {
            return Err(ModelError::InvalidSpace(format!("density integrates to {total}")));
        }
        Ok(space)
    }

    pub fn sphere(samples: usize, seed: u64) -> Result<Self, ModelError> {
        if samples == 0 {
            return Err(ModelError::InvalidSpace("sample count must be at least 1".into()));
        }
        Ok(LambdaSpace::Sphere { samples, seed })
    }

    /// `∫ ρ(λ) dλ`; exactly 1 for the sphere sampler.
    pub fn total_weight(&self) -> f64 {
        match self {
            LambdaSpace::Finite { weights, .. } => weights.iter().sum(),
            LambdaSpace::Interval { nodes, .. } => self.midpoints(*nodes).map(|(_, w)| w).sum(),
            LambdaSpace::Sphere { .. } => 1.0,
        }
    }

    fn midpoints(&self, n: usize) -> impl Iterator<Item = (Lambda, f64)> + '_ {
        let (lo, hi, density) = match self {
            LambdaSpace::Interval { lo, hi, density, .. } => (*lo, *hi, Some(density)),
            _ => (0.0, 0.0, None),
        };
        let h = (hi - lo) / n as f64;
        (0..if density.is_some() { n } else { 0 }).map(move |i| {
            let x = lo + (i as f64 + 0.5) * h;
            (Lambda::Scalar(x), density.expect("interval")(x) * h)
        })
    }

    /// Points at which per-λ conditions are checked, with their weights.
    /// Finite spaces return every point, intervals every node, and the sphere
    /// the first `limit` draws of its sample stream.
    pub fn probe(&self, limit: usize) -> Vec<(Lambda, f64)> {
        match self {
            LambdaSpace::Finite { points, weights } => points.iter().copied().zip(weights.iter().copied()).collect(),
            LambdaSpace::Interval { nodes, .. } => self.midpoints(*nodes).collect(),
            LambdaSpace::Sphere { samples, seed } => {
                let n = limit.min(*samples).max(1);
                let mut out = Vec::with_capacity(n);
                let mut chunk = 0u64;
                while out.len() < n {
                    let mut rng = chunk_rng(*seed, chunk);
                    let take = CHUNK.min(n - out.len());
                    out.extend((0..take).map(|_| (Lambda::Vector(sphere_point(&mut rng)), 1.0 / n as f64)));
                    chunk += 1;
                }
                out
            }
        }
    }

    /// `∫ ρ(λ) f(λ) dλ` for a vector-valued `f` writing `outputs` values.
    pub fn integrate<F>(&self, outputs: usize, f: F) -> Result<Estimate, ModelError>
    where
        F: Fn(&Lambda, &mut [f64]) -> Result<(), ModelError> + Sync,
    {
        match self {
            LambdaSpace::Finite { points, weights } => {
                let mut mean = vec![0.0; outputs];
                let mut buf = vec![0.0; outputs];
                for (lambda, w) in points.iter().zip(weights) {
                    f(lambda, &mut buf)?;
                    for (m, v) in mean.iter_mut().zip(&buf) {
                        *m += w * v;
                    }
                }
                Ok(Estimate {
                    mean,
                    error: vec![0.0; outputs],
                    kind: ErrorKind::Exact,
                    evaluations: points.len(),
                })
            }
            LambdaSpace::Interval { nodes, .. } => {
                let fine = self.quadrature(*nodes, outputs, &f)?;
                let coarse = self.quadrature(nodes / 2, outputs, &f)?;
                let error: Vec<f64> = fine.iter().zip(&coarse).map(|(x, y)| (x - y).abs()).collect();
                let worst = error.iter().copied().fold(0.0, f64::max);
                if worst > tolerance::QUADRATURE_LIMIT {
                    return Err(ModelError::Integration {
                        estimate: worst,
                        limit: tolerance::QUADRATURE_LIMIT,
                        nodes: *nodes,
                    });
                }
                Ok(Estimate {
                    mean: fine,
                    error,
                    kind: ErrorKind::Quadrature,
                    evaluations: nodes + nodes / 2,
                })
            }
            LambdaSpace::Sphere { samples, seed } => monte_carlo(*samples, *seed, outputs, &f),
        }
    }

    fn quadrature<F>(&self, n: usize, outputs: usize, f: &F) -> Result<Vec<f64>, ModelError>
    where
        F: Fn(&Lambda, &mut [f64]) -> Result<(), ModelError>,
    {
        let mut acc = vec![0.0; outputs];
        let mut buf = vec![0.0; outputs];
        for (lambda, w) in self.midpoints(n) {
            f(&lambda, &mut buf)?;
            for (a, v) in acc.iter_mut().zip(&buf) {
                *a += w * v;
            }
        }
        Ok(acc)
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Uniform point on the unit sphere (Archimedes: `z` uniform on `[−1, 1]`).
fn sphere_point<R: Rng>(rng: &mut R) -> [f64; 3] {
    let z = 1.0 - 2.0 * rng.random::<f64>();
    let phi = TAU * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

fn monte_carlo<F>(samples: usize, seed: u64, outputs: usize, f: &F) -> Result<Estimate, ModelError>
where
    F: Fn(&Lambda, &mut [f64]) -> Result<(), ModelError> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(samples - c * CHUNK);
            let mut rng = chunk_rng(seed, c as u64);
            let mut sum = vec![0.0; outputs];
            let mut sum_sq = vec![0.0; outputs];
            let mut buf = vec![0.0; outputs];
            for _ in 0..n {
                f(&Lambda::Vector(sphere_point(&mut rng)), &mut buf)?;
                for ((s, q), v) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(&buf) {
                    *s += v;
                    *q += v * v;
                }
            }
            Ok((sum, sum_sq))
        })
        .collect::<Result<_, ModelError>>()?;

    // Merge in chunk order for bit-identical results.
    let mut sum = vec![0.0; outputs];
    let mut sum_sq = vec![0.0; outputs];
    for (s, q) in partials {
        for i in 0..outputs {
            sum[i] += s[i];
            sum_sq[i] += q[i];
        }
    }
    let n = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let error = mean
        .iter()
        .zip(&sum_sq)
        .map(|(m, q)| {
            if samples < 2 {
                return f64::INFINITY;
            }
            let var = ((q - n * m * m) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    Ok(Estimate {
        mean,
        error,
        kind: ErrorKind::MonteCarlo,
        evaluations: samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_space_validates_weights() {
        assert!(LambdaSpace::finite(vec![Lambda::Index(0)], vec![0.5]).is_err());
        assert!(LambdaSpace::finite(vec![Lambda::Index(0), Lambda::Index(1)], vec![1.5, -0.5]).is_err());
        assert!(LambdaSpace::finite(vec![], vec![]).is_err());
        let s = LambdaSpace::finite(vec![Lambda::Scalar(1.0), Lambda::Scalar(-1.0)], vec![0.5, 0.5]).unwrap();
        let est = s
            .integrate(1, |l, out| {
                out[0] = l.scalar().unwrap();
                Ok(())
            })
            .unwrap();
        assert_eq!(est.mean, vec![0.0]);
        assert_eq!(est.kind, ErrorKind::Exact);
    }

    #[test]
    fn interval_weight_integrates_to_one() {
        let s = LambdaSpace::interval(0.0, TAU, 1024, |_| 1.0 / TAU).unwrap();
        assert!((s.total_weight() - 1.0).abs() < 1e-9);
        assert!(LambdaSpace::interval(0.0, 1.0, 1024, |_| 2.0).is_err());
        assert!(LambdaSpace::interval(0.0, 1.0, 1024, |x| 4.0 * x - 1.0).is_err());
    }

    #[test]
    fn smooth_interval_integral_is_accurate() {
        let s = LambdaSpace::interval(0.0, TAU, 1024, |_| 1.0 / TAU).unwrap();
        let est = s
            .integrate(2, |l, out| {
                let x = l.scalar().unwrap();
                out[0] = x.cos().powi(2);
                out[1] = x.sin();
                Ok(())
            })
            .unwrap();
        assert!((est.mean[0] - 0.5).abs() < 1e-12);
        assert!(est.mean[1].abs() < 1e-12);
    }

    #[test]
    fn rough_integrand_reports_non_convergence() {
        let s = LambdaSpace::interval(0.0, 1.0, 16, |_| 1.0).unwrap();
        let err = s
            .integrate(1, |l, out| {
                out[0] = l.scalar().unwrap().powi(2);
                Ok(())
            })
            .unwrap_err();
        assert!(matches!(err, ModelError::Integration { nodes: 16, .. }), "{err}");
    }

    #[test]
    fn sphere_samples_are_unit_and_seeded() {
        let s = LambdaSpace::sphere(50_000, 7).unwrap();
        let est = s
            .integrate(4, |l, out| {
                let v = l.vector().unwrap();
                out[0] = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                out[1] = v[2];
                out[2] = v[0] * v[0];
                out[3] = v[0] * v[1];
                Ok(())
            })
            .unwrap();
        assert!((est.mean[0] - 1.0).abs() < 1e-12);
        assert!(est.mean[1].abs() < 5.0 * est.error[1]);
        assert!((est.mean[2] - 1.0 / 3.0).abs() < 5.0 * est.error[2]);
        assert!(est.mean[3].abs() < 5.0 * est.error[3]);

        let again = s
            .integrate(4, |l, out| {
                let v = l.vector().unwrap();
                out[0] = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                out[1] = v[2];
                out[2] = v[0] * v[0];
                out[3] = v[0] * v[1];
                Ok(())
            })
            .unwrap();
        assert_eq!(est, again);
    }

    #[test]
    fn independent_of_thread_count() {
        let s = LambdaSpace::sphere(100_000, 3).unwrap();
        let run = || {
            s.integrate(1, |l, out| {
                out[0] = l.vector().unwrap()[0].signum();
                Ok(())
            })
            .unwrap()
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run);
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(run);
        assert_eq!(single, many);
    }

    #[test]
    fn probe_matches_sample_stream_prefix() {
        let s = LambdaSpace::sphere(10, 1).unwrap();
        let probe = s.probe(100);
        assert_eq!(probe.len(), 10);
        let first = probe[0].0.vector().unwrap();
        let mut rng = chunk_rng(1, 0);
        assert_eq!(first, sphere_point(&mut rng));
    }
}

//! Numerical thresholds shared across the workbench.

/// Equality tolerance for exact analytic identities in 4×4 arithmetic.
pub const EXACT: f64 = 1e-12;

/// Probabilities below this are treated as zero when conditioning.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// Default tolerance for analytic condition checks.
pub const ANALYTIC: f64 = 1e-9;

/// Number of standard errors allowed for Monte Carlo claims.
pub const SIGMA: f64 = 5.0;

/// Default Monte Carlo sample count for sphere-valued hidden variables.
pub const DEFAULT_SAMPLES: usize = 1_000_000;

/// Default midpoint-rule node count for interval hidden variables.
pub const QUADRATURE_NODES: usize = 1024;

/// Largest quadrature error estimate accepted before integration fails.
pub const QUADRATURE_LIMIT: f64 = 1e-6;

/// Default seed for every seeded generator.
pub const DEFAULT_SEED: u64 = 0;

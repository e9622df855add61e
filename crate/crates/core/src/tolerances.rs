//! Numerical thresholds and tolerances, collected in one place.
//!
//! Regime switches:
//!
//! | constant | value | effect |
//! |---|---|---|
//! | [`Q_EPS`] / [`P_EPS`] | 1e-6 | `|q| < Q_EPS` uses constant-product closed forms |
//! | [`Q_FLOOR`] / [`P_FLOOR`] | -1e6 | exponents at or below are the constant-reserve / minimum limit |
//! | [`SUM_GUARD`] | 1e-9 | `1 - q < SUM_GUARD` is the constant-sum branch |
//!
//! The remaining constants are default tolerances used by the engine and the
//! verification suites.

/// Half-width of the geometric (constant-product) band around `q = 0`.
pub const Q_EPS: f64 = 1e-6;
/// Half-width of the geometric band around `p = 0`.
pub const P_EPS: f64 = 1e-6;
/// `q` at or below this is treated as the constant-reserve limit.
pub const Q_FLOOR: f64 = -1e6;
/// `p` at or below this makes the value function the minimum of prices.
pub const P_FLOOR: f64 = -1e6;
/// Guard band for the `1/(1-q)` singularity at the constant-sum point.
pub const SUM_GUARD: f64 = 1e-9;

/// Pool snapshots whose stored `k` differs from the recomputed level by more
/// than this (relative) are rejected as corrupted.
pub const SNAPSHOT_K_TOL: f64 = 1e-8;
/// ExactOut may withdraw at most `x - BOUNDARY_EPS * x` when `0 < q <= 1`.
pub const BOUNDARY_EPS: f64 = 1e-9;
/// Arbitrage is skipped when the pool price is already this close (relative).
pub const ALIGN_NO_TRADE: f64 = 1e-12;
/// Largest accepted proportional input fee.
pub const MAX_FEE_RATE: f64 = 0.1;

/// Golden-section refinement stops once the bracket is this narrow (relative).
pub const GOLDEN_REL_TOL: f64 = 1e-10;
/// Midpoint-concavity slack in the consistency suite (relative to magnitude).
pub const CONCAVITY_SLACK: f64 = 1e-12;
/// Homogeneity errors above this count as violations.
pub const HOMOGENEITY_TOL: f64 = 1e-10;
/// Conjugate infimum at or below `-DIVERGENCE_THRESHOLD` is read as `-inf`.
pub const DIVERGENCE_THRESHOLD: f64 = 10.0;
/// Ray scale at which divergence of the conjugate objective is probed.
pub const DIVERGENCE_RAY: f64 = 1e6;
/// Default seed for every stochastic check.
pub const DEFAULT_SEED: u64 = 42;

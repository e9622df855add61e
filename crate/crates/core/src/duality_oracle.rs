//! Brute-force numerical checks of the duality between the power root value
//! function and the trading invariant, independent of the closed forms in
//! [`crate::power_math`] except where the closed form is the thing compared.
//!
//! - [`numeric_value`] minimizes `a x + b y` along the trading curve and
//!   compares against `k * V(a, b)`.
//! - [`conjugate_membership`] minimizes `a x + b y - V(a, b)` over prices.
//!   The objective is 1-homogeneous in `(a, b)`, so its infimum is 0 when
//!   the reserves lie on or above the level-1 set and `-inf` below it.
//! - [`consistency_check`] samples concavity, homogeneity, monotonicity and
//!   nonnegativity of `V`.
//! - [`sandwich_check`] brackets `V` between `2^(1/p) min(a, b)` and
//!   `min(a, b)` for `p < 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::numerics::{log_add_exp, softplus};
use crate::power_math::{
    ln_value_function, pq_convert, value_function, Conversion, PriceVector, Regime, Reserves,
};
use crate::tolerances::{
    CONCAVITY_SLACK, DIVERGENCE_RAY, DIVERGENCE_THRESHOLD, GOLDEN_REL_TOL, HOMOGENEITY_TOL, Q_EPS,
};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Grid span on either side of the tangency, as a factor.
const GRID_SPAN: f64 = 1e6;

/// Minimizes a unimodal `f` on `[lo, hi]`; returns `(argmin, min, iterations)`.
pub fn golden_section_min<F>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64, usize)
where
    F: Fn(f64) -> f64,
{
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (hi - lo).abs() > rel_tol * lo.abs().max(hi.abs()).max(1.0) && iters < 500 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
        iters += 1;
    }
    if fc < fd {
        (c, fc, iters)
    } else {
        (d, fd, iters)
    }
}

/// Outcome of minimizing `a x + b y` along the curve at level `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub numeric_inf: f64,
    pub closed_form: f64,
    pub rel_gap: f64,
    pub samples: usize,
}

/// Numerically evaluates `inf { a x + b y : (x^q + y^q)^(1/q) = k }` and
/// compares it with `k * V(a, b)`, `p = q / (q - 1)`.
///
/// The curve is parameterized by `u = ln x` and the objective is minimized in
/// log form, so levels and exponents near the geometric band do not overflow.
/// A log-spaced grid of `resolution` points covering `[1e-6, 1e6]` times the
/// tangency is refined by golden-section search. Inside the geometric band the
/// curve is `x y = k^2` and the closed form is `2 k sqrt(a b)`.
pub fn numeric_value(
    prices: &PriceVector,
    q: f64,
    k: f64,
    resolution: usize,
) -> Result<DualityReport> {
    if q.is_nan() || Regime::of_q(q) == Regime::Sum || q > 1.0 {
        return Err(Error::domain(format!(
            "q = {q}: the minimum sits at a vertex of the curve, not an interior point"
        )));
    }
    let k = ensure_positive("invariant level", k)?;
    if resolution < 100 {
        return Err(Error::domain(format!(
            "resolution {resolution} is below 100"
        )));
    }
    let [a, b] = match prices.prices() {
        [a, b] => [*a, *b],
        _ => return Err(Error::domain("numeric_value is two-token only")),
    };
    let (ln_a, ln_b, ln_k) = (a.ln(), b.ln(), k.ln());
    let geometric = q.abs() < Q_EPS;

    // ln y on the curve, or None outside the curve's x-range
    let ln_y = |u: f64| -> Option<f64> {
        if geometric {
            return Some(2.0 * ln_k - u);
        }
        let t = q * (u - ln_k);
        if t >= 0.0 {
            return None;
        }
        let rest = -t.exp_m1();
        (rest > 0.0).then(|| ln_k + rest.ln() / q)
    };
    let objective = |u: f64| match ln_y(u) {
        Some(ly) => log_add_exp(ln_a + u, ln_b + ly),
        None => f64::INFINITY,
    };

    let ln_ratio = ln_a - ln_b;
    let u_star = if geometric {
        ln_k - 0.5 * ln_ratio
    } else {
        ln_k - softplus(q / (1.0 - q) * ln_ratio) / q
    };
    let span = GRID_SPAN.ln();
    let grid: Vec<f64> = (0..resolution)
        .map(|i| u_star - span + 2.0 * span * i as f64 / (resolution - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&u| objective(u)).collect();
    let feasible = values.iter().filter(|v| v.is_finite()).count();
    let (best, _) =
        values.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
        );
    if !values[best].is_finite() {
        return Err(Error::domain("no feasible grid point on the curve"));
    }
    // An infeasible neighbour means the curve ends (at u = ln k) inside that
    // grid cell; the bracket then runs up to the end point itself.
    let bracket = |j: Option<usize>| match j.filter(|&j| j < grid.len()) {
        Some(j) if values[j].is_finite() => grid[j],
        Some(j) if !geometric => ln_k.clamp(grid[best].min(grid[j]), grid[best].max(grid[j])),
        _ => grid[best],
    };
    let (lo, hi) = (bracket(best.checked_sub(1)), bracket(Some(best + 1)));
    let (_, ln_num, iters) = golden_section_min(objective, lo, hi, GOLDEN_REL_TOL);
    let ln_num = ln_num.min(values[best]);

    let p = pq_convert(q, Conversion::QtoP)?;
    let mut ln_closed = ln_k + ln_value_function(prices, p)?;
    if geometric {
        // normalized level and normalized value: the pair carries a factor n
        ln_closed += std::f64::consts::LN_2;
    }
    Ok(DualityReport {
        numeric_inf: ln_num.exp(),
        closed_form: ln_closed.exp(),
        rel_gap: (ln_num - ln_closed).exp_m1().abs(),
        samples: feasible + iters + 2,
    })
}

/// Infimum of `a x + b y - V(a, b)` over positive prices.
///
/// The objective is 1-homogeneous, so it is minimized over the direction
/// segment `a + b = 1` (grid plus golden refinement, where it is convex) and
/// then scaled along the ray. A nonnegative directional minimum gives an
/// infimum of 0 (approached as the prices shrink); a negative one is reported
/// at ray scale [`DIVERGENCE_RAY`], where it falls below
/// `-DIVERGENCE_THRESHOLD` for any point clearly below the level-1 set.
pub fn conjugate_membership(reserves: &Reserves, p: f64) -> Result<f64> {
    if p.is_nan() || p >= 1.0 {
        return Err(Error::domain(format!("p = {p} must be below 1")));
    }
    let (x, y) = match reserves.amounts() {
        [x, y] => (
            ensure_positive("reserve x", *x)?,
            ensure_positive("reserve y", *y)?,
        ),
        _ => return Err(Error::domain("conjugate_membership is two-token only")),
    };
    let g = |s: f64| -> f64 {
        let prices = PriceVector::pair(s, 1.0 - s).expect("interior direction");
        s * x + (1.0 - s) * y - value_function(&prices, p).expect("p checked")
    };
    const N: usize = 2000;
    let grid: Vec<f64> = (0..N).map(|i| (i as f64 + 0.5) / N as f64).collect();
    let (best, _) =
        grid.iter()
            .enumerate()
            .map(|(i, &s)| (i, g(s)))
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    let lo = if best > 0 {
        grid[best - 1]
    } else {
        0.5 / N as f64 * 1e-3
    };
    let hi = if best + 1 < N {
        grid[best + 1]
    } else {
        1.0 - 0.5 / N as f64 * 1e-3
    };
    let (_, g_min, _) = golden_section_min(g, lo, hi, 1e-12);
    let g_min = g_min.min(g(grid[best]));
    Ok(if g_min >= 0.0 {
        g_min / DIVERGENCE_RAY
    } else {
        g_min * DIVERGENCE_RAY
    })
}

/// Whether a [`conjugate_membership`] value reads as feasible (infimum 0).
pub fn is_feasible(conjugate_gap: f64) -> bool {
    conjugate_gap > -DIVERGENCE_THRESHOLD
}

/// Violation tallies from [`consistency_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub p: f64,
    pub samples: usize,
    pub concavity_violations: usize,
    pub homogeneity_violations: usize,
    pub homogeneity_max_err: f64,
    pub monotonicity_violations: usize,
    pub negativity_violations: usize,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.concavity_violations == 0
            && self.homogeneity_violations == 0
            && self.monotonicity_violations == 0
            && self.negativity_violations == 0
    }
}

/// `(a^p + b^p)^(1/p)` with no restriction on `p`; only the `p > 1`
/// negative control goes through here.
fn unrestricted_power_root(a: f64, b: f64, p: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi * ((p * (lo / hi).ln()).exp().ln_1p() / p).exp()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Samples seeded random price pairs and tallies failures of the four
/// consistency conditions for `V(a, b) = (a^p + b^p)^(1/p)`.
///
/// `p > 1` is accepted as a negative control: the function is then convex
/// and midpoint concavity fails.
pub fn consistency_check(p: f64, sample_count: usize, seed: u64) -> Result<ConsistencyReport> {
    if p.is_nan() {
        return Err(Error::domain("p is NaN"));
    }
    if sample_count < 1000 {
        return Err(Error::domain(format!(
            "sample_count {sample_count} is below 1000"
        )));
    }
    let v = |a: f64, b: f64| -> f64 {
        if p > 1.0 {
            unrestricted_power_root(a, b, p)
        } else {
            value_function(&PriceVector::pair(a, b).expect("positive sample"), p).expect("p <= 1")
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ConsistencyReport {
        p,
        samples: sample_count,
        concavity_violations: 0,
        homogeneity_violations: 0,
        homogeneity_max_err: 0.0,
        monotonicity_violations: 0,
        negativity_violations: 0,
    };
    for _ in 0..sample_count {
        let (a1, b1) = (
            log_uniform(&mut rng, 1e-3, 1e3),
            log_uniform(&mut rng, 1e-3, 1e3),
        );
        let (a2, b2) = (
            log_uniform(&mut rng, 1e-3, 1e3),
            log_uniform(&mut rng, 1e-3, 1e3),
        );
        let (v1, v2) = (v(a1, b1), v(a2, b2));

        let mid = v(0.5 * (a1 + a2), 0.5 * (b1 + b2));
        let avg = 0.5 * (v1 + v2);
        if mid < avg - CONCAVITY_SLACK * avg.abs() {
            report.concavity_violations += 1;
        }

        let t = log_uniform(&mut rng, 0.1, 10.0);
        let err = ((v(t * a1, t * b1) - t * v1) / (t * v1)).abs();
        report.homogeneity_max_err = report.homogeneity_max_err.max(err);
        if err.is_nan() || err > HOMOGENEITY_TOL {
            report.homogeneity_violations += 1;
        }

        let (fa, fb) = (rng.random_range(1.0..10.0), rng.random_range(1.0..10.0));
        if v(a1 * fa, b1 * fb) < v1 * (1.0 - CONCAVITY_SLACK) {
            report.monotonicity_violations += 1;
        }

        if !(v1 >= 0.0 && v2 >= 0.0) {
            report.negativity_violations += 1;
        }
    }
    Ok(report)
}

/// Slacks of `2^(1/p) min(a, b) <= V(a, b) <= min(a, b)`, relative to
/// `min(a, b)`. Both are nonnegative when the bound holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichSlack {
    pub lower: f64,
    pub upper: f64,
}

pub fn sandwich_check(prices: &PriceVector, p: f64) -> Result<SandwichSlack> {
    if p.is_nan() || p >= 0.0 {
        return Err(Error::domain(format!("p = {p} must be negative")));
    }
    let [a, b] = match prices.prices() {
        [a, b] => [*a, *b],
        _ => return Err(Error::domain("sandwich_check is two-token only")),
    };
    let m = a.min(b);
    let v = value_function(prices, p)?;
    let lower = (1.0 / p).exp2() * m;
    Ok(SandwichSlack {
        lower: (v - lower) / m,
        upper: (m - v) / m,
    })
}

/// One line of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Sample sizes and seed for [`run_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub duality_cases: usize,
    pub duality_resolution: usize,
    pub membership_points: usize,
    pub consistency_samples: usize,
    pub sandwich_pairs: usize,
    /// Treat the `p = 2` control as if it were required to pass. Only useful
    /// to check that the harness reports failure.
    pub negative_control_as_positive: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: crate::tolerances::DEFAULT_SEED,
            duality_cases: 200,
            duality_resolution: 10_000,
            membership_points: 100,
            consistency_samples: 10_000,
            sandwich_pairs: 100,
            negative_control_as_positive: false,
        }
    }
}

/// Everything [`run_suite`] measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckOutcome>,
    pub duality_max_gap: f64,
    pub consistency: Vec<ConsistencyReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Worst relative gap of [`numeric_value`] over seeded random `(a, b, q)`
/// with `q` in `[-5, 0.9]` outside the geometric band, `k = 1`.
pub fn duality_sweep(seed: u64, cases: usize, resolution: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let a = log_uniform(&mut rng, 0.1, 10.0);
        let b = log_uniform(&mut rng, 0.1, 10.0);
        let q = loop {
            let q = rng.random_range(-5.0..=0.9);
            if f64::abs(q) >= Q_EPS {
                break q;
            }
        };
        let report = numeric_value(&PriceVector::pair(a, b)?, q, 1.0, resolution)?;
        worst = worst.max(report.rel_gap);
    }
    Ok(worst)
}

/// Counts sign-pattern mismatches of [`conjugate_membership`] on seeded
/// points scaled to levels in `[0.5, 1.5]` (avoiding `|level - 1| < 0.01`).
/// Feasible exactly when the level is at least 1.
pub fn membership_sweep(seed: u64, points: usize, p: f64) -> Result<usize> {
    let q = pq_convert(p, Conversion::PtoQ)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..points {
        let ratio = log_uniform(&mut rng, 0.1, 10.0);
        let level = loop {
            let l: f64 = rng.random_range(0.5..1.5);
            if (l - 1.0).abs() >= 0.01 {
                break l;
            }
        };
        let x0 = (-softplus(q * ratio.ln()) / q).exp();
        let reserves = Reserves::pair(level * x0, level * x0 * ratio)?;
        let feasible = is_feasible(conjugate_membership(&reserves, p)?);
        if feasible != (level >= 1.0) {
            mismatches += 1;
        }
    }
    Ok(mismatches)
}

/// Smallest sandwich slack over seeded random pairs.
pub fn sandwich_sweep(seed: u64, pairs: usize, p: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..pairs {
        let prices = PriceVector::pair(
            log_uniform(&mut rng, 1e-2, 1e2),
            log_uniform(&mut rng, 1e-2, 1e2),
        )?;
        let s = sandwich_check(&prices, p)?;
        worst = worst.min(s.lower).min(s.upper);
    }
    Ok(worst)
}

/// Runs the full oracle suite: duality gap, conjugate sign pattern,
/// consistency (with the `p = 2` negative control) and sandwich bounds.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut checks = Vec::new();

    let gap = duality_sweep(config.seed, config.duality_cases, config.duality_resolution)?;
    checks.push(CheckOutcome {
        name: "duality gap".into(),
        passed: gap <= 1e-6,
        detail: format!(
            "{} cases, max rel gap {gap:.3e} (<= 1e-6)",
            config.duality_cases
        ),
    });

    for p in [0.5, -1.0] {
        let bad = membership_sweep(config.seed, config.membership_points, p)?;
        checks.push(CheckOutcome {
            name: format!("conjugate sign p={p}"),
            passed: bad == 0,
            detail: format!("{bad} of {} points misclassified", config.membership_points),
        });
    }

    let mut consistency = Vec::new();
    for p in [-50.0, -1.0, 0.0, 0.5, 1.0] {
        let r = consistency_check(p, config.consistency_samples, config.seed)?;
        checks.push(CheckOutcome {
            name: format!("consistency p={p}"),
            passed: r.is_consistent(),
            detail: format!(
                "concavity {} homogeneity {} (max err {:.1e}) monotonicity {} negativity {}",
                r.concavity_violations,
                r.homogeneity_violations,
                r.homogeneity_max_err,
                r.monotonicity_violations,
                r.negativity_violations
            ),
        });
        consistency.push(r);
    }
    let control = consistency_check(2.0, config.consistency_samples, config.seed)?;
    let control_ok = if config.negative_control_as_positive {
        control.is_consistent()
    } else {
        control.concavity_violations > 0
    };
    checks.push(CheckOutcome {
        name: "negative control p=2".into(),
        passed: control_ok,
        detail: format!("{} concavity violations", control.concavity_violations),
    });
    consistency.push(control);

    for p in [-0.5, -1.0, -5.0, -50.0] {
        let worst = sandwich_sweep(config.seed, config.sandwich_pairs, p)?;
        checks.push(CheckOutcome {
            name: format!("sandwich p={p}"),
            passed: worst >= -1e-12,
            detail: format!("min slack {worst:.3e}"),
        });
    }

    Ok(SuiteReport {
        checks,
        duality_max_gap: gap,
        consistency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prices(a: f64, b: f64) -> PriceVector {
        PriceVector::pair(a, b).unwrap()
    }

    #[test]
    fn tangency_next_to_curve_end_point() {
        // q near 1 with b >> a puts the minimizer within one grid cell of x = k
        let r = numeric_value(
            &prices(1.2149900305988417, 5.342836424015609),
            0.8775097452732599,
            1.0,
            10_000,
        )
        .unwrap();
        assert!(r.rel_gap < 1e-9, "{r:?}");
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx, _) = golden_section_min(|x| (x - 1.3) * (x - 1.3) + 2.0, -4.0, 7.0, 1e-12);
        assert!((x - 1.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn numeric_value_symmetric_harmonic() {
        let r = numeric_value(&prices(1.0, 1.0), -1.0, 1.0, 10_000).unwrap();
        assert!((r.numeric_inf - 4.0).abs() < 1e-9);
        assert!((r.closed_form - 4.0).abs() < 1e-12);
        assert!(r.rel_gap <= 1e-6);
    }

    #[test]
    fn numeric_value_asymmetric_harmonic() {
        // tangency at x = 3, y = 1.5: 3 + 4 * 1.5 = 9
        let r = numeric_value(&prices(1.0, 4.0), -1.0, 1.0, 10_000).unwrap();
        assert!((r.numeric_inf - 9.0).abs() < 1e-9);
        assert!((r.closed_form - 9.0).abs() < 1e-12);
    }

    #[test]
    fn numeric_value_geometric_branch() {
        let r = numeric_value(&prices(1.0, 1.0), 0.0, 1.0, 10_000).unwrap();
        assert!((r.numeric_inf - 2.0).abs() < 1e-9);
        assert!((r.closed_form - 2.0).abs() < 1e-12);
    }

    #[test]
    fn numeric_value_near_zero_q_stays_finite_in_log_form() {
        let r = numeric_value(&prices(2.0, 5.0), 1e-5, 1.0, 10_000).unwrap();
        assert!(r.rel_gap <= 1e-6, "gap {}", r.rel_gap);
    }

    #[test]
    fn numeric_value_rejects_bad_inputs() {
        assert!(numeric_value(&prices(1.0, 1.0), 1.0, 1.0, 1000).is_err());
        assert!(numeric_value(&prices(1.0, 1.0), 0.5, 0.0, 1000).is_err());
        assert!(numeric_value(&prices(1.0, 1.0), 0.5, 1.0, 50).is_err());
    }

    #[test]
    fn conjugate_membership_follows_level_sets() {
        // q = -1 level of (2, 2) is exactly 1
        let on = conjugate_membership(&Reserves::pair(2.0, 2.0).unwrap(), 0.5).unwrap();
        assert!(on.abs() <= 1e-3);
        let above = conjugate_membership(&Reserves::pair(3.0, 3.0).unwrap(), 0.5).unwrap();
        assert!(above.abs() <= 1e-3 && is_feasible(above));
        let below = conjugate_membership(&Reserves::pair(1.998, 1.998).unwrap(), 0.5).unwrap();
        assert!(below <= -10.0);
        assert!(conjugate_membership(&Reserves::pair(1.0, 1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn consistency_examples() {
        let r = consistency_check(0.5, 10_000, 42).unwrap();
        assert!(r.is_consistent(), "{r:?}");
        let r = consistency_check(1.0, 1000, 3).unwrap();
        assert!(r.is_consistent(), "{r:?}");
        let r = consistency_check(2.0, 1000, 42).unwrap();
        assert!(r.concavity_violations > 0);
        assert!(consistency_check(0.5, 999, 42).is_err());
    }

    #[test]
    fn sandwich_examples() {
        let s = sandwich_check(&prices(3.0, 5.0), -1.0).unwrap();
        assert!((s.upper - (3.0 - 1.875) / 3.0).abs() < 1e-15);
        assert!((s.lower - (1.875 - 1.5) / 3.0).abs() < 1e-15);
        let s = sandwich_check(&prices(3.0, 5.0), -50.0).unwrap();
        assert!(s.lower >= 0.0 && s.upper >= 0.0);
        let s = sandwich_check(&prices(2.0, 2.0), -3.0).unwrap();
        assert!(s.lower.abs() < 1e-15);
        assert!(sandwich_check(&prices(1.0, 2.0), 0.0).is_err());
    }

    #[test]
    fn membership_sweep_has_no_mismatches() {
        assert_eq!(membership_sweep(42, 100, 0.5).unwrap(), 0);
        assert_eq!(membership_sweep(42, 100, -1.0).unwrap(), 0);
    }
}

//! Closed-form mathematics of the constant power root market maker.
//!
//! The trading invariant is `(sum x_i^q)^(1/q) = k` and the liquidity
//! provider's value function is `(sum c_i^p)^(1/p)`, with `q = p / (p - 1)`.
//! Special cases of the family:
//!
//! | q | invariant | p | value function |
//! |---|---|---|---|
//! | 1 | constant sum | -inf | `min(a, b)` |
//! | 0 | constant product | 0 | geometric mean |
//! | -1 | harmonic mean | 1/2 | `(sqrt a + sqrt b)^2` |
//! | -inf | constant reserve | 1 | `a + b` |
//!
//! Every power `u^e` is evaluated as `exp(e * ln u)`, and power sums are
//! factored by their dominant term, so exponents such as `q / (1 - q)` in the
//! hundreds do not overflow. Near `q = 0` all formulas switch to their
//! constant-product closed forms (see [`crate::tolerances`]).
//!
//! Trade sign convention: `dx > 0` means token x leaves the pool and the
//! trader pays `dy > 0` of token y; `dx < 0` means x is deposited and `dy < 0`
//! is withdrawn.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::numerics::{log_add_exp, softplus};
use crate::tolerances::{P_EPS, P_FLOOR, Q_EPS, Q_FLOOR, SUM_GUARD};

/// Numerical regime of an exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `q = 1` (within [`SUM_GUARD`]): constant sum, constant price.
    Sum,
    /// `|q| < Q_EPS`: constant product closed forms.
    GeometricBranch,
    General,
    /// `q <= Q_FLOOR`: constant reserve; no trading.
    ReserveLimit,
}

impl Regime {
    pub fn of_q(q: f64) -> Regime {
        if q >= 1.0 - SUM_GUARD {
            Regime::Sum
        } else if q.abs() < Q_EPS {
            Regime::GeometricBranch
        } else if q <= Q_FLOOR {
            Regime::ReserveLimit
        } else {
            Regime::General
        }
    }
}

/// Direction of the exponent map `e -> e / (e - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conversion {
    PtoQ,
    QtoP,
}

/// Maps between the value-function exponent `p` and the invariant exponent
/// `q`. The map `e / (e - 1)` is its own inverse.
///
/// `e = 1` maps to `-inf` (the constant-reserve sentinel) and `-inf` maps
/// back to 1.
pub fn pq_convert(e: f64, direction: Conversion) -> Result<f64> {
    let name = match direction {
        Conversion::PtoQ => "p",
        Conversion::QtoP => "q",
    };
    if e.is_nan() || e > 1.0 {
        return Err(Error::domain(format!("{name} = {e} is outside (-inf, 1]")));
    }
    if e == 1.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if e == f64::NEG_INFINITY {
        return Ok(1.0);
    }
    Ok(e / (e - 1.0))
}

/// The dual exponent pair together with the regime of `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParam {
    q: f64,
    p: f64,
    regime: Regime,
}

impl PowerParam {
    pub fn from_q(q: f64) -> Result<Self> {
        let p = pq_convert(q, Conversion::QtoP)?;
        Ok(PowerParam {
            q,
            p,
            regime: Regime::of_q(q),
        })
    }

    pub fn from_p(p: f64) -> Result<Self> {
        let q = pq_convert(p, Conversion::PtoQ)?;
        Ok(PowerParam {
            q,
            p,
            regime: Regime::of_q(q),
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }
}

/// Token reserves, `n >= 2`, all nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reserves(Vec<f64>);

impl Reserves {
    pub fn new(amounts: Vec<f64>) -> Result<Self> {
        if amounts.len() < 2 {
            return Err(Error::domain("reserves need at least two tokens"));
        }
        if let Some(&bad) = amounts.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain(format!(
                "reserve amount {bad} is not a nonnegative real"
            )));
        }
        Ok(Reserves(amounts))
    }

    pub fn pair(x: f64, y: f64) -> Result<Self> {
        Reserves::new(vec![x, y])
    }

    pub fn amounts(&self) -> &[f64] {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    fn two_positive(&self) -> Result<(f64, f64)> {
        if self.0.len() != 2 {
            return Err(Error::domain(
                "two-token analytics need exactly two reserves",
            ));
        }
        Ok((
            ensure_positive("reserve x", self.0[0])?,
            ensure_positive("reserve y", self.0[1])?,
        ))
    }
}

/// External market prices, all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if prices.len() < 2 {
            return Err(Error::domain("price vector needs at least two tokens"));
        }
        for &c in &prices {
            ensure_positive("price", c)?;
        }
        Ok(PriceVector(prices))
    }

    pub fn pair(a: f64, b: f64) -> Result<Self> {
        PriceVector::new(vec![a, b])
    }

    pub fn prices(&self) -> &[f64] {
        &self.0
    }
}

/// Marginal price `m` of token x in units of y, and a multiplier `alpha`
/// describing the move `m -> alpha * m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceState {
    pub m: f64,
    pub alpha: f64,
}

impl PriceState {
    pub fn new(m: f64, alpha: f64) -> Result<Self> {
        Ok(PriceState {
            m: ensure_positive("marginal price", m)?,
            alpha: ensure_positive("alpha", alpha)?,
        })
    }

    pub fn impermanent_loss(&self, q: f64) -> Result<f64> {
        impermanent_loss(q, self.alpha, self.m)
    }
}

/// Portfolio value (in units of y) and its price sensitivities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Greeks {
    pub value: f64,
    pub delta: f64,
    pub gamma: f64,
}

fn check_q(q: f64) -> Result<Regime> {
    if q.is_nan() || q > 1.0 {
        return Err(Error::domain(format!("q = {q} is outside (-inf, 1]")));
    }
    Ok(Regime::of_q(q))
}

/// `ln(ref * (1 + sum_{i != ref} exp(e * (ln v_i - ln ref)))^(1/e))` where
/// `ref` is the term with the largest `v^e`. Zero entries contribute nothing
/// when `e > 0`.
fn ln_power_sum_root(values: &[f64], e: f64) -> f64 {
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let pick = |a: f64, b: f64| if e > 0.0 { a.max(b) } else { a.min(b) };
    let init = if e > 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    let ref_log = logs.iter().copied().fold(init, pick);
    let mut skipped = false;
    let mut rest = 0.0;
    for &l in &logs {
        if !skipped && l == ref_log {
            skipped = true;
            continue;
        }
        rest += (e * (l - ref_log)).exp();
    }
    ref_log + rest.ln_1p() / e
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p > 1.0 {
        return Err(Error::domain(format!("p = {p} is outside (-inf, 1]")));
    }
    Ok(())
}

fn geometric_mean(values: &[f64]) -> f64 {
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

fn min_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Natural log of the power root value function; see [`value_function`].
pub fn ln_value_function(prices: &PriceVector, p: f64) -> Result<f64> {
    check_p(p)?;
    let c = prices.prices();
    if p.abs() < P_EPS || p <= P_FLOOR || p == 1.0 {
        return value_function(prices, p).map(f64::ln);
    }
    Ok(ln_power_sum_root(c, p))
}

/// Power root value function `(sum c_i^p)^(1/p)`.
///
/// Inside the geometric band this is the geometric mean `(prod c_i)^(1/n)`,
/// the limit of the *normalized* power mean; the unnormalized sum diverges
/// as `p -> 0`. At or below [`P_FLOOR`] it is `min(c)`.
///
/// Close to (but outside) the band the unnormalized value is astronomically
/// large or small and saturates in `f64`; use [`ln_value_function`] there.
pub fn value_function(prices: &PriceVector, p: f64) -> Result<f64> {
    check_p(p)?;
    let c = prices.prices();
    Ok(if p.abs() < P_EPS {
        geometric_mean(c)
    } else if p <= P_FLOOR {
        min_of(c)
    } else if p == 1.0 {
        c.iter().sum()
    } else {
        ln_power_sum_root(c, p).exp()
    })
}

/// Natural log of the invariant level; see [`invariant_level`].
pub fn ln_invariant_level(reserves: &Reserves, q: f64) -> Result<f64> {
    let regime = check_q(q)?;
    match regime {
        Regime::General => {
            check_level_support(reserves, q)?;
            Ok(ln_power_sum_root(reserves.amounts(), q))
        }
        _ => invariant_level(reserves, q).map(f64::ln),
    }
}

fn check_level_support(reserves: &Reserves, q: f64) -> Result<()> {
    let x = reserves.amounts();
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::depletion("all reserves are zero"));
    }
    if q <= 0.0 && x.contains(&0.0) {
        return Err(Error::depletion(format!(
            "zero reserve leaves the invariant undefined at q = {q}"
        )));
    }
    Ok(())
}

/// Invariant level `k` with `(sum x_i^q)^(1/q) = k`.
///
/// In the geometric band the level is the geometric mean of the reserves,
/// so `k = sqrt(x y)` for two tokens; at the reserve limit it is `min(x)`.
/// Zero reserves are allowed only for `0 < q <= 1`.
pub fn invariant_level(reserves: &Reserves, q: f64) -> Result<f64> {
    let regime = check_q(q)?;
    // the geometric band straddles q = 0, where zeros are not allowed either
    let q_support = if regime == Regime::GeometricBranch {
        0.0
    } else {
        q
    };
    check_level_support(reserves, q_support)?;
    let x = reserves.amounts();
    Ok(match regime {
        Regime::Sum => x.iter().sum(),
        Regime::GeometricBranch => geometric_mean(x),
        Regime::ReserveLimit => min_of(x),
        Regime::General => ln_power_sum_root(x, q).exp(),
    })
}

/// `dy` paid into the pool when `dx` of x leaves it, with depletion checks.
fn trade_dy(x: f64, y: f64, q: f64, regime: Regime, dx: f64) -> Result<f64> {
    if !dx.is_finite() {
        return Err(Error::domain(format!("trade size {dx} is not finite")));
    }
    if dx == 0.0 {
        return Ok(0.0);
    }
    let x_post = x - dx;
    if x_post <= 0.0 {
        return Err(Error::depletion(format!(
            "trade of {dx} would leave x reserve at {x_post}"
        )));
    }
    let dy = match regime {
        Regime::Sum => dx,
        Regime::GeometricBranch => y * dx / x_post,
        Regime::ReserveLimit => {
            return Err(Error::domain("the constant-reserve limit admits no trades"));
        }
        Regime::General => {
            // (y'/y)^q = 1 - (x/y)^q * ((x'/x)^q - 1)
            let e = (q * (x_post / x).ln()).exp_m1();
            if e == 0.0 {
                return Ok(0.0);
            }
            let z = -e.signum() * (q * (x / y).ln() + e.abs().ln()).exp();
            if z <= -1.0 {
                return Err(Error::depletion(format!(
                    "trade of {dx} leaves the trading curve at q = {q}"
                )));
            }
            y * (z.ln_1p() / q).exp_m1()
        }
    };
    let y_post = y + dy;
    if !(dy.is_finite() && y_post > 0.0) {
        return Err(Error::depletion(format!(
            "trade of {dx} would leave y reserve at {y_post}"
        )));
    }
    Ok(dy)
}

/// Amount `dy` of token y the pool must receive (`dy > 0`) or release
/// (`dy < 0`) when `dx` of token x is withdrawn (`dx > 0`) or deposited
/// (`dx < 0`), keeping the reserves on the same level set.
///
/// Fails with [`Error::Depletion`] if either reserve would reach zero or if
/// the trade has no solution on the curve (for `q < 0` the x reserve cannot
/// be pulled down to the asymptote `x = k`).
pub fn curve_trade(reserves: &Reserves, q: f64, dx: f64) -> Result<f64> {
    let regime = check_q(q)?;
    let (x, y) = reserves.two_positive()?;
    trade_dy(x, y, q, regime, dx)
}

fn marginal_price_xy(x: f64, y: f64, q: f64) -> f64 {
    ((1.0 - q) * (y.ln() - x.ln())).exp()
}

/// Marginal price of x in units of y, `x^(q-1) * y^(1-q)`.
pub fn marginal_price(reserves: &Reserves, q: f64) -> Result<f64> {
    check_q(q)?;
    let (x, y) = reserves.two_positive()?;
    Ok(marginal_price_xy(x, y, q))
}

/// Derivative of `dy` with respect to `dx` along the curve,
/// `(x^q + y^q - (x - dx)^q)^((1-q)/q) * (x - dx)^(q-1)`.
///
/// The first factor is `y'^(1-q)`, so this is the marginal price at the
/// post-trade reserves; it equals [`marginal_price`] at `dx = 0`.
pub fn price_impact(reserves: &Reserves, q: f64, dx: f64) -> Result<f64> {
    let regime = check_q(q)?;
    let (x, y) = reserves.two_positive()?;
    let dy = trade_dy(x, y, q, regime, dx)?;
    Ok(marginal_price_xy(x - dx, y + dy, q))
}

/// Reserves on level `k` whose marginal price is `m`:
/// `x = k / (1 + m^(q/(1-q)))^(1/q)`, `y = x * m^(1/(1-q))`.
///
/// Undefined at `q = 1`, where every reserve pair has price 1.
pub fn reserves_from_price(m: f64, k: f64, q: f64) -> Result<Reserves> {
    let regime = check_q(q)?;
    let m = ensure_positive("marginal price", m)?;
    let k = ensure_positive("invariant level", k)?;
    let (x, y) = match regime {
        Regime::Sum => {
            return Err(Error::domain(
                "price is constant at q = 1; reserves cannot be recovered from it",
            ));
        }
        Regime::GeometricBranch => {
            let s = m.sqrt();
            (k / s, k * s)
        }
        _ if q == f64::NEG_INFINITY => (k, k),
        _ => {
            let ln_m = m.ln();
            let ln_x = k.ln() - softplus(q / (1.0 - q) * ln_m) / q;
            let ln_y = ln_x + ln_m / (1.0 - q);
            (ln_x.exp(), ln_y.exp())
        }
    };
    Reserves::pair(x, y)
}

/// Constant-product impermanent loss `2 sqrt(alpha) / (alpha + 1) - 1`.
pub fn product_impermanent_loss(alpha: f64) -> f64 {
    2.0 * alpha.sqrt() / (alpha + 1.0) - 1.0
}

/// Impermanent loss after the marginal price moves from `m` to `alpha * m`:
///
/// ```text
/// I = ((1 + M^r) / (1 + (aM)^r))^(1/q) * (aM + (aM)^s) / (aM + M^s) - 1
/// r = q / (1 - q),  s = 1 / (1 - q)
/// ```
///
/// Evaluated as `expm1` of a sum of logs. Returns 0 for the constant-sum and
/// constant-reserve regimes and the product formula inside the geometric
/// band. The result depends on `m` unless `q` is 0 or 1.
pub fn impermanent_loss(q: f64, alpha: f64, m: f64) -> Result<f64> {
    let regime = check_q(q)?;
    let alpha = ensure_positive("alpha", alpha)?;
    let m = ensure_positive("marginal price", m)?;
    Ok(match regime {
        Regime::Sum | Regime::ReserveLimit => 0.0,
        Regime::GeometricBranch => product_impermanent_loss(alpha),
        Regime::General => {
            let r = q / (1.0 - q);
            let s = 1.0 / (1.0 - q);
            let ln_m = m.ln();
            let ln_am = alpha.ln() + ln_m;
            let first = (softplus(r * ln_m) - softplus(r * ln_am)) / q;
            let second = log_add_exp(ln_am, s * ln_am) - log_add_exp(ln_am, s * ln_m);
            let loss = (first + second).exp_m1();
            // no divergence loss is possible; clamp rounding noise
            loss.min(0.0)
        }
    })
}

/// Portfolio value `U(M, k) = M k (1 + M^(q/(1-q)))^((q-1)/q)` with its first
/// and second derivatives in `M`.
///
/// `delta = x(M) = k (1 + M^(q/(1-q)))^(-1/q)` (the envelope property: the
/// curve keeps `M dx + dy = 0`), and
/// `gamma = -k / (1-q) * M^(q/(1-q) - 1) * (1 + M^(q/(1-q)))^(-1/q - 1)`.
///
/// Note the exponent in delta is `q/(1-q)`; the variant with `q/(q-1)`
/// sometimes quoted alongside this `U` is not its derivative, and the gamma
/// expression must carry the factor `k`.
pub fn greeks(m: f64, k: f64, q: f64) -> Result<Greeks> {
    let regime = check_q(q)?;
    let m = ensure_positive("marginal price", m)?;
    let k = ensure_positive("invariant level", k)?;
    Ok(match regime {
        Regime::Sum => {
            return Err(Error::domain("greeks are singular at q = 1"));
        }
        Regime::GeometricBranch => {
            let s = m.sqrt();
            Greeks {
                value: 2.0 * k * s,
                delta: k / s,
                gamma: -0.5 * k / (m * s),
            }
        }
        _ if q == f64::NEG_INFINITY => Greeks {
            value: k * (m + 1.0),
            delta: k,
            gamma: 0.0,
        },
        _ => {
            let r = q / (1.0 - q);
            let ln_m = m.ln();
            let ln_k = k.ln();
            let sp = softplus(r * ln_m);
            Greeks {
                value: (ln_m + ln_k + (q - 1.0) / q * sp).exp(),
                delta: (ln_k - sp / q).exp(),
                gamma: -(ln_k - (1.0 - q).ln() + (r - 1.0) * ln_m - (1.0 / q + 1.0) * sp).exp(),
            }
        }
    })
}

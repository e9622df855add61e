//! Two-token pool on a power root curve.
//!
//! [`PoolState`] is an immutable value: [`PoolState::apply`] and
//! [`PoolState::scale_liquidity`] return new states. Quotes carry a
//! fingerprint of the state they were priced against and are rejected by any
//! other state.
//!
//! Fees are proportional to the input amount. The fee is removed before the
//! curve math and then retained in the reserves, so `k` grows with every
//! fee-paying trade and stays put (up to rounding) when `fee_rate = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::power_math::{
    curve_trade, invariant_level, marginal_price, PowerParam, Regime, Reserves,
};
use crate::tolerances::{BOUNDARY_EPS, MAX_FEE_RATE, SNAPSHOT_K_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Token x leaves the pool, token y is paid in.
    BuyX,
    /// Token x is paid in, token y leaves the pool.
    SellX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmountKind {
    ExactIn,
    ExactOut,
}

/// A priced trade against one specific pool state.
///
/// Prices are marginal prices of x in units of y. `execution_price` is the
/// average y-per-x rate on the fee-net amounts, so it always lies between
/// `price_before` and `price_after`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub direction: Direction,
    pub kind: AmountKind,
    pub amount_in: f64,
    pub amount_out: f64,
    pub fee_paid: f64,
    pub price_before: f64,
    pub price_after: f64,
    pub execution_price: f64,
    pub pool_fingerprint: String,
}

/// Serialized form of a pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSnapshot {
    pub reserves: [f64; 2],
    pub q: f64,
    pub fee_rate: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    reserves: Reserves,
    power: PowerParam,
    fee_rate: f64,
    k: f64,
}

fn fnv1a(words: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for byte in w.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn check_fee(fee_rate: f64) -> Result<f64> {
    if (0.0..=MAX_FEE_RATE).contains(&fee_rate) {
        Ok(fee_rate)
    } else {
        Err(Error::domain(format!(
            "fee rate {fee_rate} is outside [0, {MAX_FEE_RATE}]"
        )))
    }
}

/// Creates a pool from positive reserves; `k` is derived from them.
pub fn create_pool(x: f64, y: f64, q: f64, fee_rate: f64) -> Result<PoolState> {
    PoolState::new(x, y, q, fee_rate)
}

impl PoolState {
    pub fn new(x: f64, y: f64, q: f64, fee_rate: f64) -> Result<Self> {
        ensure_positive("reserve x", x)?;
        ensure_positive("reserve y", y)?;
        if !q.is_finite() {
            return Err(Error::domain(format!("q = {q} must be finite")));
        }
        let power = PowerParam::from_q(q)?;
        let fee_rate = check_fee(fee_rate)?;
        let reserves = Reserves::pair(x, y)?;
        let k = invariant_level(&reserves, q)?;
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::domain(format!(
                "invariant level of ({x}, {y}) at q = {q} is not representable"
            )));
        }
        Ok(PoolState {
            reserves,
            power,
            fee_rate,
            k,
        })
    }

    pub fn x(&self) -> f64 {
        self.reserves.x()
    }

    pub fn y(&self) -> f64 {
        self.reserves.y()
    }

    pub fn q(&self) -> f64 {
        self.power.q()
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn fee_rate(&self) -> f64 {
        self.fee_rate
    }

    pub fn power(&self) -> PowerParam {
        self.power
    }

    pub fn reserves(&self) -> &Reserves {
        &self.reserves
    }

    pub fn marginal_price(&self) -> f64 {
        marginal_price(&self.reserves, self.q()).expect("pool reserves are positive")
    }

    /// Hex digest of the exact bit patterns of reserves, `q` and fee.
    pub fn fingerprint(&self) -> String {
        let h = fnv1a(&[
            self.x().to_bits(),
            self.y().to_bits(),
            self.q().to_bits(),
            self.fee_rate.to_bits(),
        ]);
        format!("{h:016x}")
    }

    /// Prices a trade. `amount` is the input (`ExactIn`) or output
    /// (`ExactOut`) amount of the relevant token.
    pub fn quote(&self, direction: Direction, amount: f64, kind: AmountKind) -> Result<Quote> {
        let amount = ensure_positive("trade amount", amount)?;
        let q = self.q();
        let (r_in, r_out) = match direction {
            Direction::BuyX => (self.y(), self.x()),
            Direction::SellX => (self.x(), self.y()),
        };
        let keep = 1.0 - self.fee_rate;
        let (amount_in, net_in, amount_out) = match kind {
            AmountKind::ExactOut => {
                if amount >= r_out {
                    return Err(Error::depletion(format!(
                        "withdrawing {amount} would empty a reserve of {r_out}"
                    )));
                }
                let boundary_band = q > 0.0 || self.power.regime() == Regime::Sum;
                if boundary_band && amount >= r_out - BOUNDARY_EPS * r_out {
                    return Err(Error::InsufficientLiquidity {
                        requested: amount,
                        available: r_out - BOUNDARY_EPS * r_out,
                    });
                }
                let net_in = curve_trade(&Reserves::pair(r_out, r_in)?, q, amount)?;
                (net_in / keep, net_in, amount)
            }
            AmountKind::ExactIn => {
                let net_in = amount * keep;
                let out = -curve_trade(&Reserves::pair(r_in, r_out)?, q, -net_in)?;
                (amount, net_in, out)
            }
        };
        if !(amount_out > 0.0 && net_in > 0.0) {
            return Err(Error::domain(format!(
                "trade of {amount} rounds to nothing against reserves ({}, {})",
                self.x(),
                self.y()
            )));
        }
        let (x_post, y_post) = match direction {
            Direction::BuyX => (self.x() - amount_out, self.y() + amount_in),
            Direction::SellX => (self.x() + amount_in, self.y() - amount_out),
        };
        if !(x_post > 0.0 && y_post > 0.0) {
            return Err(Error::depletion(format!(
                "trade would leave reserves at ({x_post}, {y_post})"
            )));
        }
        let execution_price = match direction {
            Direction::BuyX => net_in / amount_out,
            Direction::SellX => amount_out / net_in,
        };
        Ok(Quote {
            direction,
            kind,
            amount_in,
            amount_out,
            fee_paid: amount_in - net_in,
            price_before: self.marginal_price(),
            price_after: marginal_price(&Reserves::pair(x_post, y_post)?, q)?,
            execution_price,
            pool_fingerprint: self.fingerprint(),
        })
    }

    /// Executes a quote issued against this exact state.
    pub fn apply(&self, quote: &Quote) -> Result<PoolState> {
        if quote.pool_fingerprint != self.fingerprint() {
            return Err(Error::StaleQuote);
        }
        let (x, y) = match quote.direction {
            Direction::BuyX => (self.x() - quote.amount_out, self.y() + quote.amount_in),
            Direction::SellX => (self.x() + quote.amount_in, self.y() - quote.amount_out),
        };
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::depletion(format!(
                "trade would leave reserves at ({x}, {y})"
            )));
        }
        let reserves = Reserves::pair(x, y)?;
        let k = invariant_level(&reserves, self.q())?;
        Ok(PoolState {
            reserves,
            power: self.power,
            fee_rate: self.fee_rate,
            k,
        })
    }

    /// Scales both reserves by `t`; `k` scales by `t` and the price is
    /// unchanged.
    pub fn scale_liquidity(&self, t: f64) -> Result<PoolState> {
        let t = ensure_positive("liquidity scale", t)?;
        let (x, y) = (self.x() * t, self.y() * t);
        let k = self.k * t;
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() && k.is_finite() && k > 0.0) {
            return Err(Error::domain(format!(
                "scaling by {t} leaves the representable range"
            )));
        }
        Ok(PoolState {
            reserves: Reserves::pair(x, y)?,
            power: self.power,
            fee_rate: self.fee_rate,
            k,
        })
    }

    pub fn to_snapshot(&self) -> PoolSnapshot {
        PoolSnapshot {
            reserves: [self.x(), self.y()],
            q: self.q(),
            fee_rate: self.fee_rate,
            k: self.k,
        }
    }

    /// JSON object `{"reserves": [x, y], "q": .., "fee_rate": .., "k": ..}`.
    pub fn snapshot(&self) -> String {
        serde_json::to_string(&self.to_snapshot()).expect("finite fields serialize")
    }

    /// Rebuilds a pool from a snapshot, rejecting a stored `k` that differs
    /// from the recomputed level by more than [`SNAPSHOT_K_TOL`].
    pub fn from_snapshot(snap: &PoolSnapshot) -> Result<PoolState> {
        let [x, y] = snap.reserves;
        let mut pool = PoolState::new(x, y, snap.q, snap.fee_rate)
            .map_err(|e| Error::Snapshot(e.to_string()))?;
        if !(snap.k.is_finite() && ((snap.k - pool.k) / pool.k).abs() <= SNAPSHOT_K_TOL) {
            return Err(Error::Snapshot(format!(
                "stored k = {} does not match reserves (k = {})",
                snap.k, pool.k
            )));
        }
        pool.k = snap.k;
        Ok(pool)
    }

    pub fn restore(json: &str) -> Result<PoolState> {
        let snap: PoolSnapshot =
            serde_json::from_str(json).map_err(|e| Error::Snapshot(e.to_string()))?;
        PoolState::from_snapshot(&snap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        ((a - b) / b).abs() <= tol
    }

    #[test]
    fn create_examples() {
        assert!(close(
            create_pool(100.0, 100.0, -1.0, 0.0).unwrap().k(),
            50.0,
            1e-14
        ));
        assert!(close(
            create_pool(100.0, 100.0, 0.5, 0.0).unwrap().k(),
            400.0,
            1e-14
        ));
        assert!(create_pool(100.0, 100.0, 1.5, 0.0).is_err());
        assert!(create_pool(0.0, 100.0, 0.5, 0.0).is_err());
        assert!(create_pool(100.0, 100.0, 0.5, 0.2).is_err());
        assert!(create_pool(100.0, 100.0, 0.5, -0.01).is_err());
        assert!(create_pool(100.0, 100.0, 1e-5, 0.0).is_err());
    }

    #[test]
    fn harmonic_buy_x_exact_out() {
        let pool = create_pool(100.0, 100.0, -1.0, 0.0).unwrap();
        let qt = pool
            .quote(Direction::BuyX, 20.0, AmountKind::ExactOut)
            .unwrap();
        assert!(close(qt.amount_in, 100.0 / 3.0, 1e-12));
        // (133.33 / 80)^2
        assert!(close(qt.price_after, 25.0 / 9.0, 1e-12));
        assert_eq!(qt.price_before, 1.0);
        let next = pool.apply(&qt).unwrap();
        assert!(close(next.x(), 80.0, 1e-15));
        assert!(close(next.y(), 400.0 / 3.0, 1e-12));
        assert!(close(next.k(), 50.0, 1e-12));
    }

    #[test]
    fn constant_sum_and_product_quotes() {
        let pool = create_pool(100.0, 100.0, 1.0, 0.0).unwrap();
        let qt = pool
            .quote(Direction::SellX, 30.0, AmountKind::ExactIn)
            .unwrap();
        assert_eq!(qt.amount_out, 30.0);
        assert_eq!(
            (qt.price_before, qt.price_after, qt.execution_price),
            (1.0, 1.0, 1.0)
        );

        let pool = create_pool(100.0, 100.0, 0.0, 0.0).unwrap();
        let qt = pool
            .quote(Direction::BuyX, 50.0, AmountKind::ExactOut)
            .unwrap();
        assert!(close(qt.amount_in, 100.0, 1e-15));
    }

    #[test]
    fn stale_quote_rejected() {
        let pool = create_pool(100.0, 100.0, -1.0, 0.0).unwrap();
        let qt = pool
            .quote(Direction::BuyX, 5.0, AmountKind::ExactOut)
            .unwrap();
        let moved = pool.apply(&qt).unwrap();
        assert_eq!(moved.apply(&qt), Err(Error::StaleQuote));
        let fee_pool = create_pool(100.0, 100.0, -1.0, 0.003).unwrap();
        assert_eq!(fee_pool.apply(&qt), Err(Error::StaleQuote));
    }

    #[test]
    fn zero_fee_round_trip_returns_to_start() {
        for q in [-5.0, -1.0, 0.0, 0.5, 1.0] {
            let pool = create_pool(120.0, 80.0, q, 0.0).unwrap();
            let buy = pool
                .quote(Direction::BuyX, 15.0, AmountKind::ExactOut)
                .unwrap();
            let mid = pool.apply(&buy).unwrap();
            let sell = mid
                .quote(Direction::SellX, 15.0, AmountKind::ExactIn)
                .unwrap();
            let end = mid.apply(&sell).unwrap();
            assert!(close(end.x(), pool.x(), 1e-9), "q={q}");
            assert!(close(end.y(), pool.y(), 1e-9), "q={q}");
        }
    }

    #[test]
    fn fees_grow_k() {
        let pool = create_pool(100.0, 100.0, -1.0, 0.003).unwrap();
        let buy = pool
            .quote(Direction::BuyX, 10.0, AmountKind::ExactOut)
            .unwrap();
        assert!(close(buy.fee_paid, buy.amount_in * 0.003, 1e-12));
        let mid = pool.apply(&buy).unwrap();
        let sell = mid
            .quote(Direction::SellX, 10.0, AmountKind::ExactIn)
            .unwrap();
        let end = mid.apply(&sell).unwrap();
        assert!(mid.k() > pool.k());
        assert!(end.k() > mid.k());
    }

    #[test]
    fn fee_net_amounts_stay_on_curve() {
        let pool = create_pool(100.0, 140.0, 0.5, 0.01).unwrap();
        for (dir, kind) in [
            (Direction::BuyX, AmountKind::ExactIn),
            (Direction::BuyX, AmountKind::ExactOut),
            (Direction::SellX, AmountKind::ExactIn),
            (Direction::SellX, AmountKind::ExactOut),
        ] {
            let qt = pool.quote(dir, 12.0, kind).unwrap();
            let net = qt.amount_in - qt.fee_paid;
            let (x, y) = match dir {
                Direction::BuyX => (pool.x() - qt.amount_out, pool.y() + net),
                Direction::SellX => (pool.x() + net, pool.y() - qt.amount_out),
            };
            let k = invariant_level(&Reserves::pair(x, y).unwrap(), 0.5).unwrap();
            assert!(close(k, pool.k(), 1e-10), "{dir:?} {kind:?}");
            let (lo, hi) = if qt.price_before < qt.price_after {
                (qt.price_before, qt.price_after)
            } else {
                (qt.price_after, qt.price_before)
            };
            assert!(
                lo <= qt.execution_price && qt.execution_price <= hi,
                "{dir:?} {kind:?}"
            );
        }
    }

    #[test]
    fn exact_out_boundary_on_sqrt_curve() {
        let pool = create_pool(100.0, 100.0, 0.5, 0.0).unwrap();
        assert!(pool
            .quote(Direction::BuyX, 100.0 - 1e-6, AmountKind::ExactOut)
            .is_ok());
        assert!(matches!(
            pool.quote(Direction::BuyX, 100.0 + 1e-6, AmountKind::ExactOut),
            Err(Error::Depletion(_))
        ));
        assert!(matches!(
            pool.quote(Direction::BuyX, 100.0 - 1e-8, AmountKind::ExactOut),
            Err(Error::InsufficientLiquidity { .. })
        ));
    }

    #[test]
    fn scale_liquidity_examples() {
        let pool = create_pool(100.0, 100.0, -1.0, 0.0).unwrap();
        let up = pool.scale_liquidity(2.0).unwrap();
        assert_eq!((up.x(), up.y()), (200.0, 200.0));
        assert!(close(up.k(), 100.0, 1e-12));
        let down = pool.scale_liquidity(0.5).unwrap();
        assert_eq!((down.x(), down.y()), (50.0, 50.0));
        assert!(close(down.k(), 25.0, 1e-12));
        assert!(pool.scale_liquidity(0.0).is_err());
        assert!(pool.scale_liquidity(-1.0).is_err());
    }

    #[test]
    fn scale_liquidity_keeps_price() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let q = [-5.0, -1.0, 0.0, 0.5, 0.9][rng.random_range(0..5)];
            let pool = create_pool(
                rng.random_range(1.0..1e4),
                rng.random_range(1.0..1e4),
                q,
                0.0,
            )
            .unwrap();
            for t in [0.1, 10.0] {
                let s = pool.scale_liquidity(t).unwrap();
                assert!(close(s.marginal_price(), pool.marginal_price(), 1e-12));
                let k = invariant_level(s.reserves(), q).unwrap();
                assert!(close(k, s.k(), 1e-12));
            }
        }
    }

    #[test]
    fn snapshot_round_trip_and_tampering() {
        let pool = create_pool(100.0, 100.0, -1.0, 0.0).unwrap();
        let json = pool.snapshot();
        assert_eq!(PoolState::restore(&json).unwrap(), pool);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["reserves"], serde_json::json!([100.0, 100.0]));

        let tampered = json.replace("\"k\":50.0", "\"k\":51.0");
        assert_ne!(tampered, json);
        assert!(matches!(
            PoolState::restore(&tampered),
            Err(Error::Snapshot(_))
        ));
        let bad_q = r#"{"reserves":[100.0,100.0],"q":1.5,"fee_rate":0.0,"k":200.0}"#;
        assert!(matches!(PoolState::restore(bad_q), Err(Error::Snapshot(_))));
        assert!(matches!(
            PoolState::restore("{\"reserves\":[1.0]}"),
            Err(Error::Snapshot(_))
        ));
    }

    #[test]
    fn random_zero_fee_trades_preserve_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let qs = [-5.0, -1.0, 0.0, 0.5, 1.0];
        let mut pools: Vec<PoolState> = qs
            .iter()
            .map(|&q| create_pool(1000.0, 1000.0, q, 0.0).unwrap())
            .collect();
        for i in 0..10_000 {
            let pool = &pools[i % qs.len()];
            let dir = if rng.random_bool(0.5) {
                Direction::BuyX
            } else {
                Direction::SellX
            };
            let kind = if rng.random_bool(0.5) {
                AmountKind::ExactIn
            } else {
                AmountKind::ExactOut
            };
            let amount = rng.random_range(0.001..0.3) * pool.x().min(pool.y());
            let Ok(qt) = pool.quote(dir, amount, kind) else {
                continue;
            };
            let next = pool.apply(&qt).unwrap();
            assert!(close(next.k(), pool.k(), 1e-10), "q={} step {i}", pool.q());
            pools[i % qs.len()] = next;
        }
    }
}

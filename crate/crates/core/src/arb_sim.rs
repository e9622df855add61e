//! Arbitrage replay: an idealized arbitrageur realigns a zero-fee pool to each
//! external price of a path, and the liquidity provider's realized loss
//! against holding the initial tokens is compared with the closed form.
//!
//! The hold baseline is the constant-reserve payoff `P x0 + y0`, with
//! `(x0, y0)` the reserves after the initial alignment to `P0`. The closed
//! form is evaluated at `M = P0` and `alpha = P_t / P0`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::fmt::sig12;
use crate::numerics::rel_diff;
use crate::pool_engine::{AmountKind, Direction, PoolState, Quote};
use crate::power_math::{impermanent_loss, reserves_from_price, Regime};
use crate::tolerances::ALIGN_NO_TRADE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub t: i64,
    pub price: f64,
}

/// External prices of x in units of y, strictly increasing in `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    points: Vec<PricePoint>,
}

impl PricePath {
    pub fn new(points: Vec<PricePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::PathParse {
                line: 1,
                message: "path has no points".into(),
            });
        }
        for (i, p) in points.iter().enumerate() {
            let line = i as u64 + 2;
            if !(p.price.is_finite() && p.price > 0.0) {
                return Err(Error::PathParse {
                    line,
                    message: format!("price {} is not positive", p.price),
                });
            }
            if i > 0 && p.t <= points[i - 1].t {
                return Err(Error::PathParse {
                    line,
                    message: format!(
                        "t = {} does not increase (previous {})",
                        p.t,
                        points[i - 1].t
                    ),
                });
            }
        }
        Ok(PricePath { points })
    }

    /// Convenience constructor with `t = 0, 1, 2, ...`.
    pub fn from_prices(prices: &[f64]) -> Result<Self> {
        PricePath::new(
            prices
                .iter()
                .enumerate()
                .map(|(i, &price)| PricePoint { t: i as i64, price })
                .collect(),
        )
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }
}

/// Parses a `t,price` CSV. Errors carry the 1-based line number.
pub fn load_path<R: Read>(source: R) -> Result<PricePath> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(|e| Error::PathParse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["t", "price"] {
        return Err(Error::PathParse {
            line: 1,
            message: format!(
                "expected header `t,price`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::PathParse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::PathParse { line, message };
        let t: i64 = record[0]
            .parse()
            .map_err(|_| bad(format!("t `{}` is not an integer", &record[0])))?;
        let price: f64 = record[1]
            .parse()
            .map_err(|_| bad(format!("price `{}` is not a number", &record[1])))?;
        if !(price.is_finite() && price > 0.0) {
            return Err(bad(format!("price {price} is not positive")));
        }
        if let Some(prev) = points.last().map(|p: &PricePoint| p.t) {
            if t <= prev {
                return Err(bad(format!("t = {t} does not increase (previous {prev})")));
            }
        }
        points.push(PricePoint { t, price });
    }
    PricePath::new(points)
}

/// The trade that moves the pool's marginal price to `target`, or `None`
/// when it is already there (relative gap within [`ALIGN_NO_TRADE`]).
///
/// Target reserves come from inverting the price on the current level `k`;
/// the trade pays in whichever token the target holds more of.
/// Only zero-fee pools are supported.
pub fn arbitrage_to_price(pool: &PoolState, target: f64) -> Result<Option<Quote>> {
    let target = ensure_positive("target price", target)?;
    if pool.fee_rate() != 0.0 {
        return Err(Error::domain(
            "arbitrage alignment requires a zero-fee pool",
        ));
    }
    let current = pool.marginal_price();
    if rel_diff(current, target) <= ALIGN_NO_TRADE {
        return Ok(None);
    }
    if matches!(pool.power().regime(), Regime::Sum | Regime::ReserveLimit) {
        return Err(Error::AlignmentImpossible { current, target });
    }
    let goal = reserves_from_price(target, pool.k(), pool.q())?;
    // Both legs are priced by their input so that targets leaving a sliver
    // of x stay quotable.
    let quote = if goal.x() < pool.x() {
        pool.quote(Direction::BuyX, goal.y() - pool.y(), AmountKind::ExactIn)?
    } else {
        pool.quote(Direction::SellX, goal.x() - pool.x(), AmountKind::ExactIn)?
    };
    Ok(Some(quote))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub t: i64,
    pub price: f64,
    pub x: f64,
    pub y: f64,
    pub u_pool: f64,
    pub u_hodl: f64,
    pub il_realized: f64,
    pub il_closed: f64,
    pub abs_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub rows: Vec<SimRow>,
    /// Alignment trades executed after the initial alignment.
    pub trades: usize,
}

pub const SIM_CSV_HEADER: &str = "t,price,x,y,u_pool,u_hodl,il_realized,il_closed,abs_gap";

impl SimReport {
    pub fn last(&self) -> &SimRow {
        self.rows.last().expect("a report has at least one row")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SIM_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.t,
                sig12(r.price),
                sig12(r.x),
                sig12(r.y),
                sig12(r.u_pool),
                sig12(r.u_hodl),
                sig12(r.il_realized),
                sig12(r.il_closed),
                sig12(r.abs_gap)
            )?;
        }
        Ok(())
    }
}

fn align(pool: PoolState, target: f64) -> Result<(PoolState, bool)> {
    match arbitrage_to_price(&pool, target)? {
        Some(quote) => Ok((pool.apply(&quote)?, true)),
        None => Ok((pool, false)),
    }
}

/// Replays `path` against `pool`: align to the first price, take that state
/// as the hold baseline, then align and record at every point.
pub fn run_simulation(pool: &PoolState, path: &PricePath) -> Result<SimReport> {
    let points = path.points();
    let p0 = points[0].price;
    let (mut state, _) = align(pool.clone(), p0)?;
    let (x0, y0) = (state.x(), state.y());
    let q = state.q();
    let mut rows = Vec::with_capacity(points.len());
    let mut trades = 0;
    for (i, point) in points.iter().enumerate() {
        if i > 0 {
            let (next, traded) = align(state, point.price)?;
            state = next;
            trades += traded as usize;
        }
        let price = point.price;
        let u_pool = price * state.x() + state.y();
        let u_hodl = price * x0 + y0;
        let il_realized = (u_pool - u_hodl) / u_hodl;
        let il_closed = impermanent_loss(q, price / p0, p0)?;
        rows.push(SimRow {
            t: point.t,
            price,
            x: state.x(),
            y: state.y(),
            u_pool,
            u_hodl,
            il_realized,
            il_closed,
            abs_gap: (il_realized - il_closed).abs(),
        });
    }
    Ok(SimReport { rows, trades })
}

//! Long-format figure data (`series,param,xvalue,yvalue`) for the standard
//! plots of the toolkit: level curves, impermanent loss, marginal price,
//! price impact, LP greeks and post-trade relative price.
//!
//! `param` is always the curve exponent `q`. Points outside a curve's
//! feasible region (beyond its depletion point) are omitted rather than
//! emitted as non-finite values.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::power_math::{
    curve_trade, greeks, impermanent_loss, marginal_price, price_impact, Reserves,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    Curves,
    IlVsAlpha,
    MarginalPrice,
    PriceImpact,
    Greeks,
    RelativePrice,
}

impl FigureId {
    pub const ALL: [FigureId; 6] = [
        FigureId::Curves,
        FigureId::IlVsAlpha,
        FigureId::MarginalPrice,
        FigureId::PriceImpact,
        FigureId::Greeks,
        FigureId::RelativePrice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Curves => "curves",
            FigureId::IlVsAlpha => "il_vs_alpha",
            FigureId::MarginalPrice => "marginal_price",
            FigureId::PriceImpact => "price_impact",
            FigureId::Greeks => "greeks",
            FigureId::RelativePrice => "relative_price",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Figure(format!("unknown figure `{s}`")))
    }
}

/// Grid definition for one figure.
///
/// `grid` is the horizontal axis: x reserve (curves), alpha (il_vs_alpha),
/// y/x (marginal_price), dx (price_impact, relative_price) or M (greeks).
/// `scale` is the reserve size of the symmetric pool, or `k` for greeks.
/// `m` is the entry price used by il_vs_alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    pub id: FigureId,
    pub q_values: Vec<f64>,
    pub grid: Vec<f64>,
    pub scale: f64,
    pub m: f64,
}

fn steps(n: usize, step: f64, first: usize) -> Vec<f64> {
    (first..=n).map(|i| i as f64 * step).collect()
}

impl FigureSpec {
    pub fn default_for(id: FigureId) -> Self {
        let interp = vec![-1.0, -0.5, 0.0, 0.5, 1.0];
        let (q_values, grid, scale) = match id {
            FigureId::Curves => (interp, steps(80, 0.05, 1), 1.0),
            FigureId::IlVsAlpha => (
                vec![-50.0, -5.0, -1.0, -0.5, 0.0, 0.5, 0.9, 1.0],
                (1..=100).map(|i| i as f64 / 10.0).collect(),
                1.0,
            ),
            FigureId::MarginalPrice => (interp, (1..=100).map(|i| i as f64 / 10.0).collect(), 1.0),
            FigureId::PriceImpact => (interp, steps(90, 100.0, 0), 10_000.0),
            // q = 1 is singular for the greeks; drawn just below it.
            FigureId::Greeks => (
                vec![-100.0, -1.0, 0.0, 0.5, 1.0 - 1e-6],
                (1..=100).map(|i| i as f64 / 100.0).collect(),
                1.0,
            ),
            FigureId::RelativePrice => (interp, (0..=100).map(|i| i as f64 / 50.0).collect(), 1.0),
        };
        FigureSpec {
            id,
            q_values,
            grid,
            scale,
            m: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_values.is_empty() || self.grid.is_empty() {
            return Err(Error::Figure("figure grids must be nonempty".into()));
        }
        if let Some(q) = self
            .q_values
            .iter()
            .find(|q| !(q.is_finite() && **q <= 1.0))
        {
            return Err(Error::Figure(format!("q = {q} is outside (-inf, 1]")));
        }
        if self.grid.iter().any(|v| !v.is_finite()) || self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Figure(
                "grid must be finite and strictly increasing".into(),
            ));
        }
        if !(self.scale.is_finite() && self.scale > 0.0 && self.m.is_finite() && self.m > 0.0) {
            return Err(Error::Figure("scale and m must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub series: String,
    pub param: f64,
    pub xvalue: f64,
    pub yvalue: f64,
}

pub const FIGURE_CSV_HEADER: &str = "series,param,xvalue,yvalue";

/// Feasible-point filter: depletion means "off the curve", anything else
/// is a real error.
fn feasible(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Depletion(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn figure_rows(spec: &FigureSpec) -> Result<Vec<FigureRow>> {
    spec.validate()?;
    let s = spec.scale;
    let mut rows = Vec::new();
    let mut push = |series: &str, q: f64, x: f64, y: Option<f64>| {
        if let Some(y) = y {
            rows.push(FigureRow {
                series: series.to_string(),
                param: q,
                xvalue: x,
                yvalue: y,
            });
        }
    };
    let symmetric = Reserves::pair(s, s)?;
    for &q in &spec.q_values {
        for &g in &spec.grid {
            match spec.id {
                FigureId::Curves => {
                    let dy = feasible(curve_trade(&symmetric, q, s - g))?;
                    push("curve", q, g, dy.map(|dy| s + dy));
                }
                FigureId::IlVsAlpha => push("il", q, g, Some(impermanent_loss(q, g, spec.m)?)),
                FigureId::MarginalPrice => push(
                    "marginal_price",
                    q,
                    g,
                    Some(marginal_price(&Reserves::pair(s, g * s)?, q)?),
                ),
                FigureId::PriceImpact => push(
                    "price_impact",
                    q,
                    g,
                    feasible(price_impact(&symmetric, q, g))?,
                ),
                FigureId::Greeks => {
                    let gk = greeks(g, s, q)?;
                    push("value", q, g, Some(gk.value));
                    push("delta", q, g, Some(gk.delta));
                    push("gamma", q, g, Some(gk.gamma));
                }
                FigureId::RelativePrice => push(
                    "relative_price",
                    q,
                    g,
                    feasible(price_impact(&symmetric, q, -g))?,
                ),
            }
        }
    }
    // greeks rows are regrouped so each series is contiguous
    rows.sort_by_key(|r| series_rank(&r.series));
    Ok(rows)
}

fn series_rank(series: &str) -> u8 {
    match series {
        "value" => 0,
        "delta" => 1,
        "gamma" => 2,
        _ => 3,
    }
}

pub fn write_figure_csv<W: Write>(rows: &[FigureRow], mut out: W) -> Result<()> {
    writeln!(out, "{FIGURE_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.series,
            sig12(r.param),
            sig12(r.xvalue),
            sig12(r.yvalue)
        )?;
    }
    Ok(())
}

//! Constant power root market maker toolkit.
//!
//! - [`power_math`]: closed forms for the invariant, value function, marginal
//!   price, price impact, impermanent loss and greeks.
//! - [`duality_oracle`]: brute-force numerical checks of the value/trading
//!   function duality and the consistency conditions.
//! - [`pool_engine`]: an immutable two-token pool with quoting, fees,
//!   liquidity scaling and JSON snapshots.
//! - [`arb_sim`]: arbitrage replay over an external price path, comparing
//!   realized impermanent loss with the closed form.
//! - [`figures`]: long-format figure data.

pub mod arb_sim;
pub mod duality_oracle;
pub mod error;
pub mod figures;
pub mod fmt;
pub mod numerics;
pub mod pool_engine;
pub mod power_math;
pub mod tolerances;

pub use error::{Error, Result};
pub use power_math::{PowerParam, PriceState, PriceVector, Regime, Reserves};

use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Exponent outside the consistency domain (`q > 1` or `p > 1`), or an
    /// operation that is undefined for the given regime.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value that must be strictly positive (price, reserve, level, scale).
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    /// The trade would drive a reserve to zero or leave the trading curve.
    #[error("reserve depletion: {0}")]
    Depletion(String),

    /// ExactOut amount beyond what the pool can release.
    #[error("insufficient liquidity: requested {requested}, withdrawable below {available}")]
    InsufficientLiquidity { requested: f64, available: f64 },

    #[error("stale quote: pool state changed since the quote was issued")]
    StaleQuote,

    #[error("cannot align pool price {current} to target {target}")]
    AlignmentImpossible { current: f64, target: f64 },

    #[error("invalid snapshot: {0}")]
    Snapshot(String),

    #[error("price path line {line}: {message}")]
    PathParse { line: u64, message: String },

    #[error("invalid figure spec: {0}")]
    Figure(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn depletion(msg: impl Into<String>) -> Self {
        Error::Depletion(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Rejects zero, negative, NaN and infinite inputs.
pub(crate) fn ensure_positive(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { what, value })
    }
}

use thiserror::Error;

use crate::quadrature::IntegralResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument outside the operation's domain (negative `x`, NaN, ...).
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// Distribution parameters that fail construction.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not reach tolerance within {panels} panels (best estimate log {:.6e}, relative error {:.3e})", best.log_value, best.relative_error)]
    Convergence { panels: usize, best: IntegralResult },

    /// The value exists but is only representable through its logarithm.
    #[error("{op}: value overflows f64 (log value {log_value})")]
    Overflow { op: &'static str, log_value: f64 },

    /// A tail fell below the usable range, so ratios against it are meaningless.
    #[error("{op}: tail underflow at x = {x} (log tail {log_tail})")]
    Underflow { op: &'static str, x: f64, log_tail: f64 },

    #[error("reference recursion supports depth at most {max}, requested {requested}")]
    UnsupportedDepth { requested: u32, max: u32 },

    #[error("convolution grid too coarse: estimated error {estimate:.3e} exceeds {tolerance:.1e}")]
    Resolution { estimate: f64, tolerance: f64 },
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }
}

pub(crate) fn check_x(op: &'static str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::domain(op, format!("x must be finite, got {x}")));
    }
    if x < 0.0 {
        return Err(Error::domain(op, format!("x must be nonnegative, got {x}")));
    }
    Ok(())
}

use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contour Im(lambda) = {offset} is not admissible for a call payoff (requires < -1)")]
    ContourViolation { offset: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e} within {evaluations} evaluations (error estimate {estimate:e})")]
    QuadratureFailure {
        tolerance: f64,
        estimate: f64,
        evaluations: usize,
    },

    #[error("imaginary residual {imag:e} too large against real part {real:e}")]
    ImaginaryResidual { real: f64, imag: f64 },

    #[error("order {order} exceeds the supported maximum {max}")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("price {price} outside the no-arbitrage interval ({lower}, {upper})")]
    PriceOutOfBounds { price: f64, lower: f64, upper: f64 },

    #[error("vega {vega:e} below underflow guard")]
    VegaUnderflow { vega: f64 },

    #[error("implied volatility solver did not converge")]
    NoConvergence,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParameter(_) | Error::ContourViolation { .. }
        )
    }
}

use thiserror::Error;

/// Every failure the library reports. Numeric variants carry enough context
/// to tell the caller which stage gave up.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("quadrature did not converge: estimate {estimate:e} with error {error:e} after {evaluations} evaluations")]
    NonConvergence {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },
    #[error("integrand or evaluator returned a non-finite value at x = {at}")]
    NonFinite { at: f64 },
    #[error("log-gamma pole at z = {re} + {im}i")]
    PoleError { re: f64, im: f64 },
    #[error("ODE step size underflow at x = {at}")]
    StepUnderflow { at: f64 },
    #[error("root solver did not converge: residual {residual:e}")]
    NoConvergence { residual: f64 },
    #[error("moment not defined: {0}")]
    DomainError(String),
    #[error("state not normalized: norm deviates from 1 by {deviation:e}")]
    NotNormalized { deviation: f64 },
    #[error("invalid window: k0 = {k0} must be below k1 = {k1}")]
    InvalidWindow { k0: f64, k1: f64 },
    #[error("invalid width parameter A = {0}")]
    InvalidWidth(f64),
    #[error("action below the family minimum: discriminant {discriminant:e}")]
    BelowGroundAction { discriminant: f64 },
    #[error("x = {x} outside the asymptotic range (needs x >= {x_min}) for E = {energy}")]
    OutOfAsymptoticRange { energy: f64, x: f64, x_min: f64 },
    #[error("outside supported range: {0}")]
    OutOfSupportedRange(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for failures that come from numerics giving up rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NonFinite { .. }
                | Error::StepUnderflow { .. }
                | Error::NoConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

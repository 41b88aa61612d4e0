use thiserror::Error;

/// Errors raised by the chart-level algebra.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    InvalidPrime(u64),
    #[error("integrality violation: {0}")]
    IntegralityViolation(String),
    #[error("operands live on different charts")]
    ChartMismatch,
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(u32, u32),
    #[error("negative exponents are not supported here")]
    LaurentNotSupported,
    #[error("operation requires a univariate chart")]
    MultivariateNotSupported,
    #[error("not dormant at stage {stage}: {reason}")]
    NotDormant { stage: usize, reason: String },
    #[error("element is not a unit on the chart")]
    NonUnit,
    #[error("splitting does not satisfy delta * s = 1")]
    SplitViolation,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("enumeration cap exceeded: {needed} > {cap}")]
    CapExceeded { needed: u128, cap: u128 },
    #[error("quotient ratio {got} differs from n+1 = {expected}")]
    RatioViolation { got: String, expected: u64 },
    #[error("module failed validation: {0}")]
    Invalid(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

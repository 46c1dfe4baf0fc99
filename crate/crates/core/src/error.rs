use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("frequency block {block:?} lies outside the certified cutoff {cutoff}")]
    OutsideCutoff { block: Vec<u32>, cutoff: i64 },

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("divergent: {0}")]
    Divergent(String),

    #[error("compatibility residual at the origin is {residual:e} for level {level}")]
    OriginResidual { level: u32, residual: f64 },

    #[error("truncation budget {budget:e} exceeds tolerance {tolerance:e}")]
    TruncationBudget { budget: f64, tolerance: f64 },

    #[error("non-positive error {error:e} at level {level}")]
    NonPositiveError { level: f64, error: f64 },

    #[error("integer overflow while {0}")]
    Overflow(&'static str),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn hypothesis(msg: impl Into<String>) -> Error {
    Error::HypothesisViolated(msg.into())
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("length mismatch: expected {expected} {what}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },

    #[error("amplitude vector has zero norm")]
    ZeroNorm,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("discarding edge bins needs at least two pulses (got D = {0})")]
    NoInteriorBins(usize),

    #[error("visibility {0} gives no finite dimension bound")]
    VisibilityTooHigh(f64),

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("no signal: {0}")]
    NoSignal(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

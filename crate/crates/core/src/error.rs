use thiserror::Error;

/// Errors raised while building or evaluating a link configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("rake with {fingers} fingers requested on a channel with {taps} taps")]
    TooManyFingers { fingers: usize, taps: usize },

    #[error("jitter {0} outside [0, chip_time)")]
    JitterOutOfRange(f64),

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("{0} requires all interfering users to have the same bit energy")]
    UnequalInterfererEnergy(&'static str),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

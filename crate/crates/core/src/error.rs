use thiserror::Error;

/// Errors raised by the numerical modules (geometry, encoding, simulation,
/// beamforming and metrics). Configuration and file-format problems have
/// their own error types in [`crate::config`] and [`crate::formats`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("hadamard order {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dataset is in the {found} state, expected {expected}")]
    WrongState {
        expected: &'static str,
        found: &'static str,
    },

    #[error("time span {available:.3e} s is shorter than the required {required:.3e} s")]
    TimeSpanTooShort { available: f64, required: f64 },

    #[error("profile is unmeasurable: {0}")]
    Unmeasurable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

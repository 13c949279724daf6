use thiserror::Error;

/// Failures reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("site index {index} out of range for chain of length {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("ensemble needs at least {needed} members, found {found}")]
    EnsembleTooSmall { needed: usize, found: usize },
    #[error("nonpositive temperature {value} at u = {u}")]
    NonPositiveTemperature { u: f64, value: f64 },
    #[error("horizon {horizon} shorter than required {required}")]
    InsufficientHorizon { horizon: f64, required: f64 },
    #[error("singular matrix")]
    Singular,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn require_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QkdError {
    #[error("matrix is not hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("unphysical reconstruction: {0}")]
    Unphysical(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bit strings differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("key too short: need {needed} bits, {available} available")]
    KeyTooShort { needed: usize, available: usize },

    #[error("singular tomography design matrix")]
    SingularDesign,

    #[error("total flux estimate is zero")]
    ZeroFlux,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, QkdError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> QkdError {
    QkdError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

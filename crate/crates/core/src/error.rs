use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyrepError {
    #[error("insufficient cutoff: need at least {required}, got {given}")]
    InsufficientCutoff { required: usize, given: usize },

    #[error("invalid mode index {mode} for a {nmodes}-mode state")]
    InvalidMode { mode: usize, nmodes: usize },

    #[error("beam splitter needs two distinct modes, got {0} twice")]
    SameMode(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("conditional state has zero norm")]
    ZeroNorm,

    #[error("source truncation {truncation} too small for p = {p}: discarded weight {discarded:e}")]
    TruncationTooSmall { truncation: usize, p: f64, discarded: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("cutoff overflow: {0}")]
    CutoffOverflow(String),
}

pub type Result<T> = std::result::Result<T, HyrepError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> HyrepError {
    HyrepError::InvalidParameter { name, reason: reason.into() }
}

use thiserror::Error;

/// Errors raised by the scattering engines and their building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("singular parameters: {0}")]
    SingularParameter(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("integration failed at r = {r}: {reason}")]
    IntegrationFailure { r: f64, reason: String },

    #[error("ill-conditioned {what} (condition number {cond:.3e}); try moving the fitting point")]
    IllConditioned { what: String, cond: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

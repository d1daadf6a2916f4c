use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("value outside branch range: {0}")]
    Range(String),
    #[error("numeric failure: {what} (residual {residual:e})")]
    Numeric { what: String, residual: f64 },
    #[error("ill-conditioned: {0}")]
    Conditioning(String),
    #[error("wrong branch: {0}")]
    Branch(String),
    #[error("missing capability: {0}")]
    Capability(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn cond(msg: impl Into<String>) -> Self {
        Error::Conditioning(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numeric { what: msg.into(), residual }
    }
}

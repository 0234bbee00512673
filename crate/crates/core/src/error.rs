use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// The variants follow the failure classes used throughout the crate: bad
/// grid or parameter configuration, misuse of an operation, geometric
/// problems with a domain, insufficient resolution, and violated
/// mathematical preconditions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("weight definition error: {0}")]
    Weight(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("inadmissible exponent: {0}")]
    Inadmissible(String),
    #[error("activation not in the weighted Sobolev space: {0}")]
    Activation(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}

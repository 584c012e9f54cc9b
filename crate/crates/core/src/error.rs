use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (zero trials,
    /// non-unit plane, non-invertible element, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An algebraic identity that must hold by construction did not. This
    /// always indicates a bug in the kernel, never bad input.
    #[error("algebra invariant violated: {0}")]
    Algebra(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed station log or mismatched runs during coincidence matching.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn algebra(msg: impl Into<String>) -> Self {
        Error::Algebra(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }
}

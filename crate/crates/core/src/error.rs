use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An index or grid position is beyond the available data.
    #[error("range error: {0}")]
    Range(String),

    /// Not enough recorded events to form an estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A value required by the operation was not supplied.
    #[error("contract error: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

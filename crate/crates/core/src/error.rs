use thiserror::Error;

/// Errors raised by the decision rules and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration or parameter set failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The boundary table has no row for the requested sample size.
    #[error("boundary table has no row for n = {0}")]
    MissingRow(u32),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

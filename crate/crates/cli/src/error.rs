use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid input files, out-of-domain values.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub(crate) fn read(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Usage(format!("cannot read {}: {e}", path.display()))
    }

    pub(crate) fn write(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Internal(format!("cannot write {}: {e}", path.display()))
    }
}

impl From<mtdfind_core::Error> for CliError {
    fn from(e: mtdfind_core::Error) -> Self {
        match e {
            mtdfind_core::Error::Domain(_) | mtdfind_core::Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
            mtdfind_core::Error::MissingRow(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("output: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use thiserror::Error;

/// Failures of a CLI run, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid parameters, tokens or inputs.
    #[error("invalid input: {0}")]
    Validation(String),
    /// Unreadable, unwritable or malformed files.
    #[error("i/o error: {0}")]
    Io(String),
    /// Numerical or other internal failure.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<cmi_core::Error> for CliError {
    fn from(e: cmi_core::Error) -> Self {
        match e {
            cmi_core::Error::NoConvergence(_) => CliError::Internal(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

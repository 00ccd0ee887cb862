use thiserror::Error;

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("solver failed: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io(_) => 4,
            CliError::Solver(_) => 5,
        }
    }
}

impl From<qbcast_core::Error> for CliError {
    fn from(e: qbcast_core::Error) -> Self {
        match e {
            qbcast_core::Error::NoConvergence { .. } => CliError::Solver(e.to_string()),
            qbcast_core::Error::UnknownChannel(_) => CliError::Parse(e.to_string()),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

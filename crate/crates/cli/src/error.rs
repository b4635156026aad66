use thiserror::Error;

/// Failures surfaced to the shell, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag combinations.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or invalid input files and documents.
    #[error("{0}")]
    Data(String),
    /// Anything that points at a bug rather than at the input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<cpop_core::Error> for CliError {
    fn from(err: cpop_core::Error) -> Self {
        use cpop_core::Error as E;
        match err {
            E::InvalidPenalty(_) | E::InvalidMinSegLen(_) | E::InvalidPenaltyRange { .. } => {
                CliError::Usage(err.to_string())
            }
            E::UnsortedData { .. }
            | E::InvalidNoiseScale { .. }
            | E::Shape(_)
            | E::InsufficientData { .. }
            | E::NonFinite { .. }
            | E::InvalidGrid(_)
            | E::DegenerateResiduals => CliError::Data(err.to_string()),
            _ => CliError::Internal(err.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

//! CLI error type with the documented exit codes.

use canopy_core::Error as CoreError;
use thiserror::Error;

/// Exit codes: 0 success, 2 invalid arguments, 3 malformed input data,
/// 4 algorithm divergence; anything else exits 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    InvalidArguments(String),
    #[error("{0}")]
    MalformedInput(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidArguments(_) => 2,
            CliError::MalformedInput(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Io { .. } | CliError::Other(_) => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::InvalidArgument(_) | CoreError::PlacementFailure { .. } => {
                CliError::InvalidArguments(e.to_string())
            }
            CoreError::EmptyInput(_)
            | CoreError::MalformedInput(_)
            | CoreError::OutOfCoverage { .. } => CliError::MalformedInput(e.to_string()),
            CoreError::AlgorithmDivergence { .. } => CliError::Divergence(e.to_string()),
            CoreError::SaturatedOcclusion { .. } => CliError::Other(e.to_string()),
        }
    }
}

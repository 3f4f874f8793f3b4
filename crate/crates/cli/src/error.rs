use std::process::ExitCode;

use thiserror::Error;

use mediabias_core::corpus::CorpusError;
use mediabias_core::features::FeatureError;
use mediabias_core::interpret::InterpretError;
use mediabias_core::learn::LearnError;

/// Errors grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration; exit code 1.
    #[error("{0}")]
    Config(String),
    /// Unreadable or inconsistent input data; exit code 2.
    #[error("{0}")]
    Data(String),
    /// A broken internal invariant; exit code 3.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    /// Prefixes the message, keeping the category.
    pub fn context(self, prefix: impl std::fmt::Display) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{prefix}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{prefix}: {m}")),
            CliError::Internal(m) => CliError::Internal(format!("{prefix}: {m}")),
        }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::MissingResource(..) | FeatureError::InvalidMinDf => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::InvalidParameter(_) | LearnError::VariantMismatch { .. } => {
                CliError::Config(e.to_string())
            }
            LearnError::EmptyDataset
            | LearnError::SingleClass(_)
            | LearnError::ClassTooSmall { .. } => CliError::Data(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<InterpretError> for CliError {
    fn from(e: InterpretError) -> Self {
        match e {
            InterpretError::SpaceMismatch { .. } => CliError::Internal(e.to_string()),
            InterpretError::NonPositiveYears(_) => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub(crate) fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

use std::path::PathBuf;

use thiserror::Error;

/// Failures of a command, grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("training failed: {0}")]
    Training(String),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl ToString) -> Self {
        CliError::Config { field: field.into(), message: message.to_string() }
    }

    pub fn stage(stage: &'static str, message: impl ToString) -> Self {
        CliError::Stage { stage, message: message.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 configuration, 3 training, 4 sampling or integration, 5 filesystem.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Training(_) => 3,
            CliError::Stage { .. } => 4,
            CliError::Io { .. } => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use std::path::PathBuf;

use thiserror::Error;

/// Everything the CLI can fail with. [`Error::exit_code`] maps the variants
/// onto the documented process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid manifest: {0}")]
    ManifestInvalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("stage {stage} failed at frame {frame}: {msg}")]
    StageFailure { stage: &'static str, frame: u64, msg: String },
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::ManifestInvalid(_) | Error::Format { .. } => 2,
            Error::Io { .. } | Error::StageFailure { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        Error::Format { path: path.into(), msg: msg.to_string() }
    }

    pub fn stage(stage: &'static str, frame: u64, msg: impl ToString) -> Self {
        Error::StageFailure { stage, frame, msg: msg.to_string() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

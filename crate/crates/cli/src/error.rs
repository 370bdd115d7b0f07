use std::path::PathBuf;

use thiserror::Error;
use tilt_core::TiltError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("row {row}, column {col}: {msg}")]
    Parse { row: u64, col: usize, msg: String },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: u64, col: usize },
    #[error("no data rows")]
    Empty,
    #[error("{0}")]
    Config(String),
    #[error("shifted cutpoints are not strictly increasing: {0:?}")]
    NonMonotoneCutpoints(Vec<f64>),
    #[error("{0}")]
    Output(String),
    #[error(transparent)]
    Tilt(#[from] TiltError),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "cli::Io",
            CliError::Parse { .. } => "cli::ParseError",
            CliError::NonFinite { .. } => "cli::NonFinite",
            CliError::Empty => "cli::Empty",
            CliError::Config(_) => "cli::Config",
            CliError::NonMonotoneCutpoints(_) => "cli::NonMonotoneCutpoints",
            CliError::Output(_) => "cli::Output",
            CliError::Tilt(e) => e.code(),
        }
    }

    /// Process exit code: 2 for domain and solver failures, 1 for everything
    /// to do with files and configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NonMonotoneCutpoints(_) | CliError::Tilt(_) => 2,
            _ => 1,
        }
    }
}

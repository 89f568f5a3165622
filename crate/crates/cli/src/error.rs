use std::io;
use std::path::{Path, PathBuf};

use modehb::{MetricsError, RunError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or unreadable configuration, bad arguments.
    #[error("{0}")]
    Config(String),
    #[error("no runs found in {}", .0.display())]
    NoRuns(PathBuf),
    #[error("benchmark {0:?} has no oracle")]
    Unsupported(String),
    #[error("run {run} aborted: {source}")]
    Run { run: String, source: RunError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl CliError {
    /// Process exit status: 2 for usage and configuration problems, 3 for
    /// failed evaluations, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::NoRuns(_) | CliError::Unsupported(_) => 2,
            CliError::Run { .. } => 3,
            CliError::Io { .. } | CliError::Format { .. } | CliError::Metrics(_) => 1,
        }
    }

    pub(crate) fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, message: impl ToString) -> CliError {
        CliError::Format {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

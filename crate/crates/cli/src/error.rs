use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: malformed corpus at byte offset {offset}: {reason}", path.display())]
    Malformed { path: PathBuf, offset: u64, reason: String },

    #[error("{}: empty corpus", path.display())]
    Empty { path: PathBuf },

    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("{0}")]
    Usage(String),

    /// Parameters the core library rejected before any solving started.
    #[error("{0}")]
    Invalid(#[from] unshuffle_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Errors are usage or I/O problems; solver failures travel in the report instead.
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(2)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {msg}", location(path, *line))]
    Config {
        path: PathBuf,
        line: Option<usize>,
        msg: String,
    },

    #[error("{}: {msg}", location(path, *line))]
    Schema {
        path: PathBuf,
        line: Option<usize>,
        msg: String,
    },

    #[error(transparent)]
    Core(#[from] credit_core::Error),

    #[error("verification failed: {0}")]
    VerifyFailed(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

fn location(path: &Path, line: Option<usize>) -> String {
    match line {
        Some(l) => format!("{}:{l}", path.display()),
        None => path.display().to_string(),
    }
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn schema(path: impl AsRef<Path>, line: Option<usize>, msg: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.as_ref().to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    pub fn config(path: impl AsRef<Path>, line: Option<usize>, msg: impl Into<String>) -> Self {
        CliError::Config {
            path: path.as_ref().to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code: config 2, schema 3, numeric 4, I/O 5.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Schema { .. } => 3,
            CliError::VerifyFailed(_) => 4,
            CliError::Io { .. } => 5,
            CliError::Core(e) if e.is_numeric() => 4,
            CliError::Core(credit_core::Error::Config(_)) => 2,
            CliError::Core(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

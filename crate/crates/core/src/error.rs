use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid primitive {index}: {reason}")]
    InvalidPrimitive { index: usize, reason: String },

    #[error("invalid rotation: {0}")]
    InvalidRotation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid scene: {0}")]
    Scene(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no placement possible: {0}")]
    NoPlacementPossible(String),

    #[error("alignment failed: {0}")]
    Alignment(String),

    #[error("empty asset: {0}")]
    EmptyAsset(String),

    #[error("degenerate box: {0}")]
    DegenerateBox(String),

    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with incompatible arguments (rank, grid, variant).
    #[error("usage error: {0}")]
    Usage(String),

    /// Parameters violate the hypotheses required by the selected system.
    #[error("validation error: {0}")]
    Validation(String),

    /// Non-finite values or broken invariants detected during computation.
    #[error("integrity error{}: {message}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Integrity { step: Option<u64>, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn integrity(message: impl Into<String>) -> Self {
        Error::Integrity {
            step: None,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

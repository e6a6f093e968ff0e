use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    /// Invalid parameters, violated preconditions, or a malformed config.
    #[error("configuration error: {0}")]
    Config(String),

    /// NaN/Inf values, overflow, or an iteration that failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Two operands live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Malformed snapshot or report file.
    #[error("format error: {0}")]
    Format(String),

    /// An internal guarantee failed; indicates a bug.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        LabError::Numeric(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

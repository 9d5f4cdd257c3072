//! Error type shared across the toolkit.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PatError {
    /// Detector layout, grid or scan geometry violates an invariant.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A configuration value is out of its admissible range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Input data rejected (wrong content rather than wrong shape).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Dimension mismatch between operator and operand; a caller bug.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Iteration blew up; the step sizes violate their contract.
    #[error("solver diverged: {0}")]
    Divergence(String),

    /// A pipeline stage needs an artifact another command produces first.
    #[error("missing dependency: {0}")]
    MissingDependency(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("file format error in {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl PatError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PatError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        PatError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, PatError>;

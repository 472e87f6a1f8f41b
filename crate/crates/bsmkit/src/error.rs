//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BsmError>;

/// Errors reported by the toolkit.
///
/// The CLI maps these onto exit codes: construction/validation and I/O
/// problems are data errors (exit 3), solver and convergence problems are
/// numerical failures (exit 4).
#[derive(Debug, Error)]
pub enum BsmError {
    /// Invalid argument or inconsistent input data.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Two containers that must share a frequency/direction grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A linear solve or series evaluation failed numerically.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Training diverged; the loss became non-finite.
    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    /// Malformed or unsupported file contents.
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("audio error: {0}")]
    Audio(String),
}

impl BsmError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        BsmError::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        BsmError::Numerical(msg.into())
    }

    /// Exit code class for the CLI: 3 for data problems, 4 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            BsmError::Numerical(_) | BsmError::NonFiniteLoss { .. } => 4,
            _ => 3,
        }
    }
}

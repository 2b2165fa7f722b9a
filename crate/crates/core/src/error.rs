//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The linear solver reported failure; signals a corrupted MRP.
    #[error("linear system is singular")]
    SingularSystem,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// Environment generation kept producing unsolvable transition
    /// matrices and gave up.
    #[error("environment generation failed after {attempts} attempts")]
    GenerationFailure { attempts: u32 },

    #[error("replay memory is empty")]
    EmptyMemory,

    #[error("selection over an empty grid")]
    EmptyGrid,

    /// A schedule was evaluated with a zero step or visit count.
    #[error("invalid step for schedule evaluation: {0}")]
    InvalidStep(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Text-format parse failure (MRP files, experiment configs).
    #[error("parse error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

use std::io;

use thiserror::Error;

use crate::solver::AdmmTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("filter size {filter_size} exceeds image dimensions {rows}x{cols}")]
    FilterTooLarge {
        filter_size: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("window size must be odd, got {0}")]
    EvenWindow(usize),

    #[error("unknown pattern kind `{0}`")]
    UnknownPattern(String),

    #[error("solver diverged at iteration {iteration}")]
    Diverged { iteration: usize, trace: AdmmTrace },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// True when the error stems from bad input (as opposed to I/O).
    pub fn is_invalid_input(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

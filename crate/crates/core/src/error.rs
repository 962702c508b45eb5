use std::io;

use thiserror::Error;

/// Errors produced by the sampling and reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("parameter `{name}` out of range: {reason}")]
    OutOfRange { name: &'static str, reason: String },

    #[error("spectrum kind mismatch: expected {expected}, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("PGM error at byte {offset}: {message}")]
    Pgm { offset: usize, message: String },

    #[error("CSV error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("area fraction {target} unreachable on this grid (nearest achievable {nearest})")]
    UnreachableFraction { target: f64, nearest: f64 },

    #[error("zero total spectral energy")]
    ZeroEnergy,

    #[error("empty sample set")]
    EmptySamples,

    #[error("duplicate sample position ({0}, {1})")]
    DuplicatePosition(usize, usize),

    #[error("position ({row}, {col}) outside {height}x{width} grid")]
    PositionOutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("occlusion mask is fully opaque")]
    FullyOccluded,

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(name: &'static str, reason: impl Into<String>) -> Error {
    Error::OutOfRange {
        name,
        reason: reason.into(),
    }
}

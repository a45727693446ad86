//! File formats: logit dumps, PGM/PBM masks, run records and heatmap exports.

pub mod dump;
pub mod heatmap;
pub mod pnm;

use std::path::Path;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::record::RunRecord;
use crate::tensor::Scale;

/// Malformed input, located by byte offset.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("bad magic at byte 0: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("truncated input at byte {offset}: {what} needs {expected} bytes in total, file has {actual}")]
    Truncated {
        offset: usize,
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("{count} unexpected trailing bytes at byte {offset}")]
    TrailingBytes { offset: usize, count: usize },

    #[error("non-finite value at byte {offset}")]
    NonFinite { offset: usize },

    #[error("invalid header at byte {offset}: {reason}")]
    InvalidHeader { offset: usize, reason: String },

    #[error("unsupported format at byte {offset}: {reason}")]
    Unsupported { offset: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, found {actual}")]
    DimensionMismatch { expected: Scale, actual: Scale },
}

pub fn write_record(path: impl AsRef<Path>, run: &RunRecord) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, run.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn read_record(path: impl AsRef<Path>) -> Result<RunRecord> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    RunRecord::from_json(&bytes)
}

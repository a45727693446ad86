use thiserror::Error;

use crate::io::FormatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vocabulary size must be at least 2, got {0}")]
    InvalidVocab(usize),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("shape mismatch in `{tensor}`: expected {expected}, got {actual}")]
    ShapeMismatch {
        tensor: &'static str,
        expected: String,
        actual: String,
    },

    #[error("non-finite value in `{tensor}` at flat index {index}")]
    NonFiniteValue { tensor: &'static str, index: usize },

    #[error("token id {token} at position {position} is out of range for vocabulary of size {vocab}")]
    TokenOutOfRange {
        token: u32,
        position: usize,
        vocab: usize,
    },

    #[error("guidance field is zero everywhere; no guidance distribution exists")]
    AllZeroField,

    #[error("evenness is undefined for a single-token map")]
    SingleTokenMap,

    #[error("distribution lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("mask has no background pixels; divergence cannot be estimated")]
    EmptyBackground,

    #[error("mask has no foreground pixels; divergence cannot be estimated")]
    EmptyForeground,

    #[error("no scored steps")]
    NoScoredSteps,

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid guidance scheme: {0}")]
    InvalidScheme(String),

    #[error("unknown class {class} (oracle has {classes} classes)")]
    UnknownClass { class: u32, classes: usize },

    #[error("invalid oracle configuration: {0}")]
    InvalidOracle(String),

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidSampler(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("run record serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

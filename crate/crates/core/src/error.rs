use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MvotError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MvotError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("embedding dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("component {index} is not finite")]
    NonFinite { index: usize },

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("subset indices must be strictly ascending: {0:?}")]
    UnsortedSubset(Vec<u32>),

    #[error("subset has {subset} indices but {entries} entries were given")]
    SubsetLengthMismatch { subset: usize, entries: usize },

    #[error("channel count mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },

    #[error("retrieval threshold {tr} out of range 1..={max}")]
    ThresholdOutOfRange { tr: usize, max: usize },

    #[error("combination budget exceeded: {required} hash evaluations > budget {budget}")]
    CombinationBudget { required: u128, budget: u128 },

    #[error("chaff shortage: need {needed} vectors, source has {available} (short by {})", needed - available)]
    ChaffShortage { needed: usize, available: usize },

    #[error(
        "brute-force attack refused: search space is 2^{bits:.1} hash evaluations ({bits:.1} bits), budget is 2^{budget_bits:.1}"
    )]
    AttackBudget { bits: f64, budget_bits: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate record for identity {identity:?}, channel {channel} (line {line})")]
    DuplicateRecord {
        identity: String,
        channel: u32,
        line: usize,
    },

    #[error("unknown identity {0:?}")]
    UnknownIdentity(String),

    #[error("helper format: {0}")]
    Format(#[from] FormatError),

    #[error("{0}")]
    Analysis(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Failures while decoding a helper container.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("missing or unsupported version header ({0})")]
    Version(String),

    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),

    #[error("stream truncated while reading {0}")]
    Truncated(&'static str),

    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("{0}")]
    Invalid(String),
}

use thiserror::Error;

use crate::state::MultiIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a multipartite state needs at least two factors, got {0}")]
    TooFewFactors(usize),

    #[error("factor {axis} has dimension {dim}; every factor must have dimension at least 2")]
    FactorTooSmall { axis: usize, dim: usize },

    #[error("index {index} has {got} coordinates but the state has {expected} factors")]
    IndexArity {
        index: MultiIndex,
        got: usize,
        expected: usize,
    },

    #[error("index {index} is out of range for dims {dims:?}")]
    IndexOutOfRange { index: MultiIndex, dims: Vec<usize> },

    #[error("index {0} appears more than once")]
    DuplicateIndex(MultiIndex),

    #[error("amplitude at {index} is not finite")]
    NonFiniteAmplitude { index: MultiIndex },

    #[error("the zero vector cannot be normalized or decomposed")]
    ZeroState,

    #[error("state must be normalized (norm {norm:.3e} differs from 1)")]
    NotNormalized { norm: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("total dimension of {what} overflows")]
    DimensionOverflow { what: &'static str },

    #[error("invalid subsystem: {0}")]
    InvalidSubsystem(String),

    #[error("subsystem space of dimension {dim} exceeds the dense cap {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("state is not cyclic for subsystem {subsystem:?}: slice rank {rank} < {full}")]
    NotCyclic {
        subsystem: Vec<usize>,
        rank: usize,
        full: usize,
    },

    #[error("the conditioning projector has zero probability in this state")]
    ZeroConditioning,

    #[error("the target projector annihilates the state")]
    ProjectorAnnihilates,

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("subsystem and complement have unequal dimensions {left} and {right}; no full-rank completion exists")]
    UnequalDims { left: usize, right: usize },

    #[error("pairing value j({a}, {b}) overflows 64 bits")]
    PairingOverflow { a: u64, b: u64 },

    #[error("no supported index lies within bounds {0:?}")]
    EmptySupport(Vec<usize>),

    #[error("weight rule vanished at support index {0}")]
    VanishingWeight(MultiIndex),

    #[error("support pattern is defined for 3 or 4 factors, got {0}")]
    UnsupportedArity(usize),

    #[error("extension hypothesis fails: {family} family over the {m}-window has rank {rank} < {expected}")]
    ExtensionHypothesis {
        family: &'static str,
        m: usize,
        rank: usize,
        expected: usize,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown state name '{0}'")]
    UnknownState(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed state file: {field}: {message}")]
    Malformed { field: String, message: String },

    #[error("unsupported format_version '{found}' (supported: {supported})")]
    VersionMismatch { found: String, supported: String },
}

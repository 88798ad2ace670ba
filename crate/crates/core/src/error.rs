use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spin value {0} is not -1 or +1")]
    InvalidSpin(i64),
    #[error("spin vector must have at least one site")]
    EmptySpinVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("memory set must contain at least one memory")]
    EmptyMemorySet,
    #[error("memory {second} duplicates memory {first}")]
    DuplicateMemory { first: usize, second: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("site {site} is outside a network of {n} sites")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("probe mask must select at least one site")]
    EmptyMask,
    #[error("field strength must be a non-negative finite number, got {0}")]
    InvalidFieldStrength(f64),
    #[error("memories {first} and {second} are not orthogonal")]
    NotOrthogonal { first: usize, second: usize },
    #[error("the field bound needs a probe over all sites")]
    PartialMask,
    #[error("probe already equals the target memory on its mask")]
    AlreadyMemory,
    #[error("index {index} out of range for {len} memories")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{what} is {value}, outside the hardware range [-{limit}, {limit}]")]
    OutOfHardwareRange { what: &'static str, value: f64, limit: f64 },
    #[error("{engine} supports at most {cap} spins, problem has {n}")]
    CapExceeded { engine: &'static str, cap: usize, n: usize },
    #[error("norm drifted by {drift:e} after step {step}")]
    NormDrift { drift: f64, step: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("capacity bound diverges: success probability is 1 at this precision")]
    Unbounded,
    #[error("no embedding found: logical qubit {logical} could not be placed")]
    EmbeddingNotFound { logical: usize },
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("qubit id {id} out of range for a graph of {size} qubits")]
    QubitOutOfRange { id: usize, size: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

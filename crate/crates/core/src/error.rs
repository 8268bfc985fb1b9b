use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit register")]
    InvalidQubit { qubit: usize, n_qubits: usize },

    #[error("qubit index {0} appears more than once")]
    DuplicateQubit(usize),

    #[error("parameter {name} = {value} outside its admissible range {range}")]
    ParameterRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid state vector: {0}")]
    InvalidState(String),

    #[error("measurement branch has probability {0:e}, too small to renormalize")]
    DegenerateBranch(f64),

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("{0}")]
    OutOfRange(String),

    #[error("scale limit exceeded: {0}")]
    Scale(String),

    #[error("beta = {beta} gives non-integral K for N = {universe}; admissible betas: {admissible}")]
    NonIntegralCardinality {
        beta: f64,
        universe: usize,
        admissible: String,
    },

    #[error("malformed transcript: {0}")]
    Transcript(String),

    #[error("payload does not match player kind: {0}")]
    PayloadMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

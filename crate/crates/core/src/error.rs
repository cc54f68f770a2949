use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is not a positive power of two")]
    NotPowerOfTwo(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("naive Hadamard oracle too large: d = {d} exceeds {max}")]
    OracleTooLarge { d: usize, max: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("t = {t} is not admissible; require 0 <= t <= 1 - m_d = {max}")]
    Inadmissible { t: f64, max: f64 },

    #[error("empty sample set")]
    EmptySample,

    #[error("vector has non-finite or zero norm")]
    DegenerateVector,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("matrix is singular over GF(2)")]
    SingularMatrix,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("variable index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("input too large: {0}")]
    TooLarge(String),

    #[error("symbolic expansion exceeded {limit} terms")]
    BlowupExceeded { limit: usize },

    #[error("function has no crucial terms")]
    NoCrucialTerms,

    #[error("function has degree {degree}, at most 2 required")]
    DegreeTooHigh { degree: usize },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("internal verification failed: {0}")]
    VerificationFailed(String),

    #[error("malformed document: {0}")]
    Format(String),
}

use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Every y value is identical, so the rank correlation is undefined.
    #[error("degenerate sample: all y values are equal")]
    DegenerateSample,

    /// A bootstrap replicate kept drawing constant-y subsamples.
    #[error("degeneracy exhausted: no subsample of size {m} with two distinct y values after {attempts} draws")]
    DegeneracyExhausted { m: usize, attempts: usize },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

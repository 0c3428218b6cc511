use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function (zero theta argument, zero base, ...).
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid nome frame: {0}")]
    InvalidFrame(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("non-finite value produced in {0}")]
    Overflow(String),
    /// A denominator theta factor vanishes (to working precision) on the summation range.
    #[error("singular instance: {0}")]
    Singular(String),
    #[error("no admissible sample for {identity} after {attempts} attempts")]
    SamplingFailure { identity: String, attempts: usize },
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

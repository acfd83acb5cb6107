use slowvary_algebra::{AlgebraError, ParseError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("parse error at offset {}: {}", .0.offset, .0.message)]
    Parse(#[from] ParseError),
    #[error("operator and field belong to different cross-sections: {0}")]
    VariantMismatch(String),
    #[error("{what} {got} exceeds the cap {cap}")]
    CapOverflow { what: &'static str, got: i64, cap: i64 },
    #[error("no solution: {0}")]
    Unsolvable(String),
    #[error("spectral check failed: {0}")]
    Spectral(String),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
    #[error("problem file: {0}")]
    ProblemFile(String),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("convolution rate must be negative, got {0}")]
    NonNegativeRate(String),
    #[error("time derivative requested for `{0}` but the dependency table has no entry")]
    MissingDependency(String),
    #[error("time derivative of bare coupling symbol `{0}` is undefined outside a convolution")]
    BareCoupling(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("operands belong to different graded rings")]
    MismatchedRing,
    #[error("expression is not divisible by {symbol}^{power}")]
    NotDivisible { symbol: String, power: u32 },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A syntax error with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        ParseError { offset, message: message.into() }
    }
}

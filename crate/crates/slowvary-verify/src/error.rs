use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Construction(#[from] slowvary::Error),
    #[error("expression: {0}")]
    Expression(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("time step {dt} exceeds the stability limit {limit:.4e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("solution diverged at t = {0}")]
    Diverged(f64),
    #[error("wavenumber {0} is outside the slow branch")]
    Branch(f64),
    #[error("degenerate range: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VerifyError>;

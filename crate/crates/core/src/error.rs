use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("symmetry violated: defect {0:e}")]
    Symmetry(f64),
    #[error("iteration diverged at step {iteration}: residual {residual:e}")]
    Diverged { iteration: usize, residual: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("power iteration stagnated after {0} iterations")]
    Stagnation(usize),
    #[error("no root bracketed: {0}")]
    NoBracket(String),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

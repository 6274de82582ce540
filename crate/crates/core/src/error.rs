use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("infeasible: {detail}")]
    Infeasible {
        /// Index of the constraint row certifying infeasibility, when one is known.
        row: Option<usize>,
        detail: String,
    },

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("solver error: {0}")]
    Solver(String),

    #[error("projection did not converge after {iterations} sweeps (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("size guard: {0}")]
    Guard(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

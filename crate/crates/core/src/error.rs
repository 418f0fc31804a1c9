use std::io;

/// Errors raised by the solvers and the I/O layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A reaction was evaluated at a negative temperature. Solutions are
    /// nonnegative, so this indicates a solver bug.
    #[error("domain error: reaction evaluated at s = {0}")]
    Domain(f64),

    #[error("grid mismatch: expected {expected} interior nodes, got {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::conic::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} is not positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("{what} has eigenvalue {value:e} below the clamp threshold")]
    NegativeEigenvalue { what: &'static str, value: f64 },

    #[error("congruence matrix is numerically singular (condition number {0:e})")]
    IllConditioned(f64),

    #[error(
        "matrices are not simultaneously diagonalized by the given transform (residual {0:e})"
    )]
    NotDiagonalizing(f64),

    #[error("secular-equation bisection did not converge in {0} iterations")]
    BisectionFailure(usize),

    #[error("grid oracle supports at most {max} disturbance dimensions, got {got}")]
    DimensionTooLarge { max: usize, got: usize },

    #[error("invalid problem data: {0}")]
    InvalidSpec(String),

    #[error("solver finished with status {status:?}{}", step_suffix(*.step))]
    Solver {
        status: SolveStatus,
        step: Option<usize>,
    },
}

fn step_suffix(step: Option<usize>) -> String {
    match step {
        Some(k) => format!(" at step {k}"),
        None => String::new(),
    }
}

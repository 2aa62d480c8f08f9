use thiserror::Error;

use crate::mimo::MimoError;
use crate::schedule::ScheduleError;

/// Failures of the online solver and of the benchmark oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("nonfinite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no delivered feedback for period {period}")]
    EmptyFeedback { period: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("inner solver stopped after {iterations} iterations with residual {residual:.3e}")]
    InnerSolver {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },
    #[error("oracle stopped after {iterations} iterations with residual {residual:.3e}")]
    Oracle { iterations: usize, residual: f64 },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Mimo(#[from] MimoError),
}

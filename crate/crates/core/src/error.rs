use thiserror::Error;

use crate::solver::RelaxedSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel instance: {0}")]
    InvalidInstance(String),

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("source-relay SNRs are required for this check")]
    MissingSourceRelayData,

    #[error("per-user lower bounds sum to {total} which exceeds the relay budget {budget}")]
    InfeasibleLowerBounds { total: f64, budget: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The solver ran out of iterations. The best iterate is attached, flagged
    /// as not certified.
    #[error("no certified solution after {iterations} iterations (kkt residual {residual:e})")]
    MaxItersExceeded {
        iterations: usize,
        residual: f64,
        best: Box<RelaxedSolution>,
    },

    #[error("{count} assignments exceed the enumeration limit of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by unreachable rate targets.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_) | Error::InfeasibleLowerBounds { .. }
        )
    }
}

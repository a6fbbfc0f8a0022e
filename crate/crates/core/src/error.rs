use thiserror::Error;

use crate::grid::DiscreteField;
use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters: exponents out of range, non-orthogonal rotations,
    /// degenerate boxes and so on.
    #[error("configuration error: {0}")]
    Config(String),

    /// Inputs outside the domain of an operation (gradient at the origin,
    /// balls leaving the grid, test functions not vanishing on the boundary).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numeric maximization did not settle within its budget.
    #[error("computation error: {message} (best lower bound {best_lower_bound})")]
    Computation { message: String, best_lower_bound: f64 },

    #[error("solver did not converge: {}", .0.1.summary())]
    NotConverged(Box<(DiscreteField, SolveReport)>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

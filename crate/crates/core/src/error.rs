use thiserror::Error;

use crate::models::{ModelId, PrimitiveState};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive water height {h:e} in cell {cell}")]
    NonPositiveHeight { cell: usize, h: f64 },

    #[error("loss of hyperbolicity: complex eigenvalues at {state:?}")]
    Hyperbolicity { state: PrimitiveState },

    #[error("{model} does not support {what}")]
    Unsupported { model: ModelId, what: &'static str },

    #[error("unsupported reconstruction order {0} (expected 1, 3 or 5)")]
    UnsupportedOrder(usize),

    #[error("degenerate interface state: spectral radius is zero")]
    DegenerateState,

    #[error("invalid boundary condition: {0}")]
    InvalidBoundary(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("step limit of {0} exceeded")]
    MaxSteps(usize),

    #[error("non-finite state after step {step}")]
    NonFinite { step: usize },

    #[error("no admissible root of the equilibrium quartic at x = {x}: {reason}")]
    Root { x: f64, reason: String },

    #[error("equilibrium is not steady: residual {residual:e} above {tol:e}")]
    NotSteady { residual: f64, tol: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Re-targets a cell-local error to a global cell index.
    pub(crate) fn at_cell(self, cell: usize) -> Self {
        match self {
            Error::NonPositiveHeight { h, .. } => Error::NonPositiveHeight { cell, h },
            other => other,
        }
    }
}

use thiserror::Error;

use crate::solver::Trace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown objective `{0}`")]
    UnknownObjective(String),

    /// The objective returned NaN or an infinity.
    #[error("non-finite objective value {value} at {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },

    /// Grid and quadrature oracles enumerate the whole box and are limited to
    /// one or two dimensions.
    #[error("grid oracles support at most 2 dimensions, got {0}")]
    UnsupportedDimension(usize),

    #[error("iterate became non-finite at iteration {k}")]
    NonFiniteIterate { k: usize },

    /// A failure inside a solver loop, with the records collected so far.
    #[error("solver failed after {} iterations: {source}", trace.records.len())]
    Solver {
        #[source]
        source: Box<Error>,
        trace: Box<Trace>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures caused by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. } | Error::NonFiniteIterate { .. } => true,
            Error::Solver { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

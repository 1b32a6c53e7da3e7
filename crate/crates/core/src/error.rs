use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("chart violation: {0}")]
    Chart(String),

    #[error("state does not match the map domain: {0}")]
    Domain(String),

    /// A multiplicative factor or retraction argument became non-positive.
    #[error("step size too large: factor {factor} at block {block}, coordinate {coordinate}")]
    StepSize {
        block: usize,
        coordinate: usize,
        factor: f64,
    },

    #[error("inversion failed after {iterations} iterations (residual {residual:e}): {reason}")]
    Inversion {
        reason: String,
        last_iterate: Vec<f64>,
        residual: f64,
        iterations: usize,
    },

    /// Wraps an inner error with the orbit index at which it happened.
    #[error("at orbit index {index}: {source}")]
    AtIndex {
        index: i64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    /// Attaches the orbit index at which the failure happened.
    pub fn at(self, index: i64) -> Self {
        Error::AtIndex {
            index,
            source: Box::new(self),
        }
    }

    /// Orbit index attached to this error, if any.
    pub fn index(&self) -> Option<i64> {
        match self {
            Error::AtIndex { index, .. } => Some(*index),
            _ => None,
        }
    }

    /// The innermost error, with index wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIndex { source, .. } => source.root(),
            e => e,
        }
    }
}

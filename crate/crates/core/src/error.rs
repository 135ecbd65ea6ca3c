use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("node {node} outside grid of {nnodes} nodes")]
    OutOfRange { node: usize, nnodes: usize },
    #[error("field does not vanish within {radius} nodes of the boundary on axis {axis}")]
    Margin { axis: usize, radius: usize },
    #[error("metric is not positive definite at node {0}")]
    NotPositiveDefinite(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("numerical blow-up at t = {time}: norm grew by factor {growth:.3e}")]
    BlowUp { time: f64, growth: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("check {id}: {source}")]
    Check {
        id: String,
        #[source]
        source: Box<Error>,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// The innermost error, looking through [`Error::Check`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Check { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn in_check(self, id: impl Into<String>) -> Error {
        Error::Check { id: id.into(), source: Box::new(self) }
    }
}

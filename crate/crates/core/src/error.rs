use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("singular matrix: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("rejected iterate: {0}")]
    InvalidIterate(String),

    #[error("state invariant violated: {0}")]
    InvalidState(String),

    #[error("magnetic field is not divergence-free (||div B|| = {norm:.3e})")]
    NotDivergenceFree { norm: f64 },

    #[error("operation not supported in {dim} dimensions: {what}")]
    UnsupportedDimension { dim: usize, what: &'static str },

    #[error("time step failed at t = {t}: {source}")]
    StepFailed {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the underlying cause is a failed nonlinear solve.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::Singular { .. } | Error::InvalidIterate(_) => {
                true
            }
            Error::StepFailed { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

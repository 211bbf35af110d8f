use std::path::PathBuf;

use thiserror::Error;

use crate::driver::RunReport;
use crate::solver::IterationLog;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate element {element} (jacobian determinant {det:e})")]
    DegenerateElement { element: usize, det: f64 },

    #[error("fields live on different degree-of-freedom maps")]
    DofMapMismatch,

    /// Cholesky met a non-positive pivot. For the Nitsche system this means the
    /// stabilization parameter exceeds the inverse-inequality bound.
    #[error(
        "system matrix is not positive definite (pivot {pivot:e} at row {row}); \
         the stabilization parameter alpha is likely too large for this mesh and degree"
    )]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("fixed-point iteration did not converge within {} iterations", .log.len())]
    NonConvergence { log: IterationLog },

    /// An adaptive run stopped in `round`; `partial` holds the completed rounds.
    #[error("adaptive run aborted in round {round}: {source}")]
    Aborted {
        round: usize,
        partial: Box<RunReport>,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

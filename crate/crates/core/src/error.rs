use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("insufficient data for {what}: need at least {needed}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("trajectory '{id}' has {len} states but {required} are required")]
    TrajectoryTooShort {
        id: String,
        len: usize,
        required: usize,
    },

    #[error("thinning out of range: trajectory has {len} states, at most {max_count} samples fit with stride {stride} from index {start}")]
    ThinningOutOfRange {
        len: usize,
        start: usize,
        stride: usize,
        max_count: usize,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("system matrix is not stable: spectral radius {0}")]
    Unstable(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("integration diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("training data must contain exactly two classes, found {0}")]
    ClassCount(usize),

    #[error("trajectory '{0}' has no class label")]
    MissingLabel(String),

    #[error("no a* within the shift budget: the process does not mix detectably")]
    NonMixing,

    #[error("{}:{line}: {msg}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

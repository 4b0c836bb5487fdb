use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config file {}: {msg}", path.display())]
    Config { path: PathBuf, msg: String },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Infeasible(String),

    #[error(transparent)]
    Core(#[from] dynmmd::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        use dynmmd::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Write { .. } => EXIT_USAGE,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Core(e) => match e {
                E::InvalidParameter(_) | E::Unstable(_) | E::NotPositiveSemidefinite(_) => EXIT_USAGE,
                E::NonMixing | E::ThinningOutOfRange { .. } | E::InsufficientData { .. } | E::NotConverged { .. } => {
                    EXIT_INFEASIBLE
                }
                E::DimensionMismatch { .. }
                | E::NonFinite(_)
                | E::TrajectoryTooShort { .. }
                | E::Divergence { .. }
                | E::ClassCount(_)
                | E::MissingLabel(_)
                | E::Parse { .. }
                | E::Io { .. } => EXIT_DATA,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

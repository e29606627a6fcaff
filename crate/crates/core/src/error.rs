use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot open repository `{locator}`: {message}")]
    UnreadableRepository { locator: String, message: String },

    #[error("git error: {0}")]
    Git(#[from] git2::Error),

    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty record stream")]
    EmptyRecords,

    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),

    #[error("degenerate pairs: every paired difference is zero, so the signed-rank test is undefined (both settings gave identical coefficients)")]
    DegeneratePairs,

    #[error("empty sample")]
    EmptySample,

    #[error("all work shares are zero")]
    ZeroWork,

    #[error("outlier fraction {0} is outside [0, 0.5)")]
    InvalidFraction(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no eligible projects: {0}")]
    NoEligibleProjects(&'static str),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors that stem from the data being statistically degenerate rather
    /// than from bad input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegeneratePairs
                | Error::InsufficientData(_)
                | Error::NoEligibleProjects(_)
                | Error::EmptySample
                | Error::ZeroWork
        )
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chromosome: {0}")]
    InvalidChromosome(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parents differ in length ({father} vs {mother})")]
    InvalidPair { father: usize, mother: usize },

    /// Every roulette weight is zero; callers fall back to uniform selection.
    #[error("roulette selection over all-zero weights")]
    DegenerateSelection,

    #[error("{path}: format error at byte {offset}: {message}")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("{path}: truncated, expected {expected} bytes but found {actual}")]
    Truncated { path: PathBuf, expected: u64, actual: u64 },

    #[error("model error: {0}")]
    Model(String),

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Format { .. } | Error::Truncated { .. } | Error::Model(_) | Error::Io { .. } | Error::Csv { .. } => {
                3
            }
            _ => 4,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid problem instance: {0}")]
    Instance(String),

    #[error("invalid objective configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("user {0} has zero activity; its normalized gradient is undefined")]
    DegenerateUser(usize),

    #[error("user {0} belongs to no group")]
    UnknownGroup(usize),

    #[error("balanced exposure requires user groups on the instance")]
    MissingGroups,

    #[error("dense preference matrix of {entries} entries exceeds the cap of {cap}")]
    TooLarge { entries: usize, cap: usize },

    #[error("non-finite value at step {t}: {what}")]
    NonFinite { t: u64, what: String },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

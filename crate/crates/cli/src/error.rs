use std::fmt;
use std::process::ExitCode;

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or input data (exit 2).
    Config(String),
    /// Non-finite value during a run (exit 3).
    Numeric(String),
    /// Anything else, such as unwritable output (exit 1).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numeric(_) => ExitCode::from(3),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            CliError::Runtime(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl From<offr::Error> for CliError {
    fn from(e: offr::Error) -> Self {
        match e {
            offr::Error::NonFinite { .. } => CliError::Numeric(e.to_string()),
            offr::Error::Io { .. } => CliError::Runtime(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

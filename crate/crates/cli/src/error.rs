//! CLI error handling and exit codes.

use std::fmt;

/// Process exit codes: 0 success, 1 usage error, 2 data error,
/// 3 verification-suite failure.
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unknown names or invalid parameter combinations.
    Usage(String),
    /// Malformed or inconsistent input data, or a failed computation.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Tag an error as a usage problem.
pub fn usage(err: impl fmt::Display) -> CliError {
    CliError::Usage(err.to_string())
}

/// Tag an error as a data problem.
pub fn data(err: impl fmt::Display) -> CliError {
    CliError::Data(err.to_string())
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

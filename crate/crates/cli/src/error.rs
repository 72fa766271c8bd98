use std::fmt;

use vise_core::ViseError;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Degenerate(String),
    Io(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Io(_) => 4,
            CliError::Numeric(_) => 1,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Degenerate(m) => write!(f, "degenerate model: {m}"),
            CliError::Io(m) => write!(f, "I/O failure: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ViseError> for CliError {
    fn from(e: ViseError) -> Self {
        match e {
            ViseError::Validation { .. } | ViseError::Domain { .. } => CliError::Validation(e.to_string()),
            ViseError::DegenerateRule(m) => CliError::Degenerate(m),
            ViseError::Io(_) | ViseError::Csv(_) | ViseError::Json(_) => CliError::Io(e.to_string()),
            ViseError::Overflow { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

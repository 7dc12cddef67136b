use std::fmt;

use symsign::Error;

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or inputs outside what the tools accept. Exit 1.
    Usage(String),
    /// A verification or lower-bound check failed. Exit 2.
    Check(String),
    /// Memory cap, I/O or cache trouble. Exit 3.
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Check(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Resource(m) => write!(f, "resource error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidArgument(_)
            | Error::OutOfRange(_)
            | Error::OutOfScope(_)
            | Error::NotNormalized(_)
            | Error::Parse { .. }
            | Error::PoleAtOne(_) => CliError::Usage(msg),
            Error::DeligneViolation { .. }
            | Error::HeckeVerification(_)
            | Error::Overflow(_)
            | Error::Degenerate(_)
            | Error::Invariant(_) => CliError::Check(msg),
            Error::Resource { .. } | Error::Io(_) | Error::Cache(_) => CliError::Resource(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Resource(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

use std::fmt;
use std::process::ExitCode;

use fouqv::{Error, ErrorClass};

/// Everything that can stop a command, with its exit code.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Config(String),
    Input(String),
    Io(std::io::Error),
    /// Outputs were written but at least one verdict failed.
    Verdict,
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::InputData => 3,
                ErrorClass::Internal => 1,
            },
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Io(_) | CliError::Verdict => 1,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Verdict => write!(f, "one or more verdicts failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

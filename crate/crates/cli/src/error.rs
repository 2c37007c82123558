//! CLI error type carrying the process exit code contract:
//! 0 success, 2 validation error, 3 numerical failure, 4 property-suite
//! failure.

use std::fmt;

use nlcomp_core::Error as CoreError;

/// Exit code for validation problems: unreadable or malformed scenarios,
/// out-of-range parameters, missing blocks, I/O failures.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for numerical failures: negativity blow-ups, non-convergence,
/// unmet solver hypotheses.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit code for a failed randomized property suite.
pub const EXIT_SUITE: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// The scenario (or a flag) is invalid; the message names the
    /// offending key and, for parse errors, the line.
    Validation(String),
    /// A numerical process failed; the message is the machine-readable
    /// reason from the core library.
    Numerical(String),
    /// The `verify` property suite reported failures.
    Suite(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Suite(_) => EXIT_SUITE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "validation: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical: {msg}"),
            CliError::Suite(msg) => write!(f, "property suite: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            // Construction-time rejections are scenario problems.
            CoreError::InvalidGrid(_)
            | CoreError::InvalidKernel(_)
            | CoreError::GridMismatch(_)
            | CoreError::InvalidInput(_) => CliError::Validation(err.to_string()),
            // Everything else is a failure of a numerical process
            // (including unmet solver hypotheses discovered at run time).
            _ => CliError::Numerical(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Validation(format!("i/o: {err}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

//! Batch front end for `nfda-core`: ingestion, experiment execution and
//! report emission. Exit codes: 0 ok, 2 I/O, 3 parse/data, 4 precondition,
//! 5 numerical failure.

pub mod args;
pub mod commands;
pub mod selftest;

use std::fmt;
use std::path::Path;

use nfda_core::ErrorClass;

pub use args::{Cli, Command};

/// Failure with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_IO: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_PRECONDITION: u8 = 4;
pub const EXIT_NUMERICAL: u8 = 5;

impl CliError {
    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PRECONDITION,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<nfda_core::Error> for CliError {
    fn from(err: nfda_core::Error) -> Self {
        let code = match err.class() {
            ErrorClass::Data => EXIT_DATA,
            ErrorClass::Precondition => EXIT_PRECONDITION,
            ErrorClass::Numerical => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: &Cli) -> u8 {
    let result = match &cli.command {
        Command::Describe(a) => commands::describe(a),
        Command::Predict(a) => commands::predict(a),
        Command::Extremes(a) => commands::extremes(a),
        Command::Selftest(a) => selftest::run(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

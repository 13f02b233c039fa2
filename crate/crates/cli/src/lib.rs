//! Batch driver behind the `twist-green` binary: config ingestion, the
//! subcommands, and report files.

pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

pub use commands::{run, Command};
pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{op}: {message}")]
    Numerical { op: &'static str, message: String },
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical { .. } => 2,
            CliError::Config(_) | CliError::Output(_) => 3,
        }
    }
}

/// Outcome of a subcommand that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Nothing to verify, e.g. the exponent bound with all exponents zero.
    Skipped,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Skipped => 0,
            Verdict::Fail => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Skipped => "skipped",
        }
    }
}

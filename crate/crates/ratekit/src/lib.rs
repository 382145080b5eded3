//! Scenario-driven front end for the rate-induced tipping engine.
//!
//! Everything numerical lives in `ratekit-core`; this crate reads scenario
//! JSON, runs one analysis and writes JSON/CSV/SVG reports.

pub mod builtins;
pub mod cli;
pub mod commands;
pub mod diag;
pub mod model;
pub mod output;
pub mod scenario;
pub mod svg;

use std::fmt;

pub use cli::{run, Cli, Command, CommonArgs};
pub use scenario::Scenario;

/// Errors mapped onto exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable or inconsistent scenario (exit 2).
    Validation(String),
    /// The numerics failed (exit 3).
    Numerical(String),
    /// Writing outputs failed (exit 3).
    Output(String),
    /// `--expect-tipping` and no critical rate (exit 4).
    NoTipping(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) | CliError::Output(_) => 3,
            CliError::NoTipping(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Output(_) => "output",
            CliError::NoTipping(_) => "no_tipping",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Output(m) | CliError::NoTipping(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

/// Numerical failures exit 3; anything that points at a malformed problem
/// exits 2.
impl From<ratekit_core::Error> for CliError {
    fn from(e: ratekit_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

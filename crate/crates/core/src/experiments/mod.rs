//! Configuration, initial data, output formats and the experiment drivers
//! behind the `chlab` binary and the examples.

pub mod commands;
pub mod config;
pub mod init;
pub mod output;

use std::fmt;

pub use commands::{execute, Command, Outcome, RunOptions};
pub use config::{load_config, parse_config, ConfigError, RunConfig};

/// Failure of an experiment, with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpError {
    Config(ConfigError),
    Solver(crate::Error),
    Io(String),
    /// A falsifiable check failed under `--strict`.
    CheckFailed(String),
    /// Stopped by the user; partial outputs carry a truncation marker.
    Interrupted { t: f64 },
}

impl ExpError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExpError::Config(_) => 2,
            ExpError::Solver(_) => 3,
            ExpError::CheckFailed(_) => 4,
            ExpError::Io(_) => 1,
            ExpError::Interrupted { .. } => 130,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExpError::Config(_) => "config",
            ExpError::Solver(_) => "solver",
            ExpError::Io(_) => "io",
            ExpError::CheckFailed(_) => "check",
            ExpError::Interrupted { .. } => "interrupted",
        }
    }

    /// One-line JSON description for machine consumption.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl fmt::Display for ExpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpError::Config(e) => write!(f, "{e}"),
            ExpError::Solver(e) => write!(f, "solver failure: {e}"),
            ExpError::Io(m) => write!(f, "i/o error: {m}"),
            ExpError::CheckFailed(m) => write!(f, "check failed: {m}"),
            ExpError::Interrupted { t } => write!(f, "interrupted at t = {t}"),
        }
    }
}

impl std::error::Error for ExpError {}

impl From<crate::Error> for ExpError {
    fn from(e: crate::Error) -> Self {
        ExpError::Solver(e)
    }
}

impl From<ConfigError> for ExpError {
    fn from(e: ConfigError) -> Self {
        ExpError::Config(e)
    }
}

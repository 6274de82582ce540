//! Experiment runner for `drsub-core`: configuration, instance generation,
//! parallel solver dispatch and CSV/JSON output.

use std::fmt;

pub mod commands;
pub mod config;
pub mod run;
pub mod seeding;
pub mod stats;

pub use config::{Experiment, ExperimentConfig, InstanceParams, Solver};

/// Failures that end a command, each with its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad configuration or input data.
    Config(String),
    /// A solver failed on at least one cell.
    Solver(String),
    /// Output could not be written.
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Solver(m) => write!(f, "solver error: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

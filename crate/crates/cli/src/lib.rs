//! Benchmark harness behind the `qem` binary: experiment drivers that wrap
//! the core simulators and learners into reproducible, seeded runs emitting
//! plot-ready CSV plus a JSON sidecar.
//!
//! The drivers live in [`commands`] and are callable as library functions so
//! integration tests can run them in-process; the binary is a thin argument
//! shell around them.

pub mod circuits;
pub mod commands;
pub mod config;
pub mod hamiltonian;
pub mod report;
pub mod singler;

use std::fmt;

/// Harness-level error, carrying the process exit code contract:
/// configuration problems exit 2, runtime caps exit 3, everything else 1.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration (exit code 2).
    Config(String),
    /// A runtime cap was exceeded, e.g. filter starvation (exit code 3).
    Cap(String),
    /// Any other failure (exit code 1).
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Cap(msg) => write!(f, "runtime cap exceeded: {msg}"),
            CliError::Run(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qem_core::Error> for CliError {
    fn from(e: qem_core::Error) -> Self {
        match e {
            qem_core::Error::CapExceeded(msg) => CliError::Cap(msg),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(format!("i/o failure: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Maps a core error raised while *interpreting user configuration* (layout
/// construction, noise validation) to the config exit code instead of the
/// generic runtime one.
pub fn config_err(e: qem_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

//! Scenario runner for `perfsim-core`: JSON configs in, provenance-stamped CSV and JSON out.

#![forbid(unsafe_code)]
#![warn(missing_docs)]

pub mod config;
pub mod output;
pub mod parallel;
pub mod scenario;

pub use config::{Scenario, ScenarioConfig};
pub use scenario::run;

/// Everything that can stop a run.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// The configuration is malformed or out of range.
    #[error("config error: {0}")]
    Config(String),
    /// A library computation failed.
    #[error(transparent)]
    Core(#[from] perfsim_core::Error),
    /// Filesystem failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    /// CSV encoding failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    /// JSON encoding failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl RunError {
    /// Process exit status: 1 for configuration errors, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}

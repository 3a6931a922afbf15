//! Batch front-end: resolve a run configuration, orchestrate the sweep with
//! deterministic seeding, and serialize results as CSV or JSON with a
//! metadata sidecar.

pub mod config;
pub mod emit;
pub mod run;

pub use config::{
    Command, DecayJob, MapJob, Observable, OutputFormat, RunConfig, SweepJob,
};
pub use run::{run, RunSummary};

/// CLI-level failures, mapped onto process exit codes by the binary.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config field '{field}': {message}")]
    InvalidConfig { field: String, message: String },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        CliError::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Exit status: 2 for config errors, 3 for i/o failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidConfig { .. } => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<ddsim_core::Error> for CliError {
    fn from(e: ddsim_core::Error) -> Self {
        CliError::InvalidConfig {
            field: "sequence".into(),
            message: e.to_string(),
        }
    }
}

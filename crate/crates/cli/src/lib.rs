//! Batch harness: flat configs, an experiment registry, sweeps on a worker
//! pool and deterministic CSV/JSON outputs.

pub mod config;
pub mod error;
pub mod experiments;
pub mod record;
pub mod registry;
pub mod runner;
pub mod study;

pub use config::{ExperimentConfig, RawConfig};
pub use error::CliError;
pub use record::RunRecord;
pub use registry::{Experiment, Registry};
pub use runner::{execute, run_experiment, RunOptions};

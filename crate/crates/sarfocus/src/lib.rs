//! Experiment harness for `sarfocus-core`: configuration, built-in scenes,
//! file formats and the simulate / autofocus / evaluate pipeline.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod scenes;

pub use config::ExperimentConfig;
pub use error::HarnessError;
pub use experiment::{run_experiment, Experiment, Report, ReportRow};

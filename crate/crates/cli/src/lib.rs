//! Experiment harness: configuration, the dataset → method → evaluation
//! pipeline, and report tables.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod instances;
pub mod report;

pub use config::{ExperimentConfig, Method, Overrides, PenaltySetting};
pub use experiment::{run_experiment, RunOutput};
pub use report::{report, Report};

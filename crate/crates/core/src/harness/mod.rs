//! Experiment ingestion, deterministic RNG discipline, preset scenarios,
//! CSV persistence, and the sweep runner behind the CLI.

pub mod config;
pub mod presets;
pub mod rng;
pub mod run;

pub use config::{parse_config, parse_config_with, ExperimentConfig, Preset};
pub use run::{run_experiment, MetricRecord};

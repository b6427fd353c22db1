//! Experiment runner for the robust movable-antenna optimizer.

pub mod config;
pub mod experiment;

pub use config::{load_config, parse_config, ExperimentSpec};
pub use experiment::{read_design, run_experiment, write_design, ExperimentReport};

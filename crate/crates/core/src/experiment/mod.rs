//! Configuration-driven experiments with built-in pass/fail assertions.

pub mod config;
pub mod run;

pub use config::{parse_config, ExperimentConfig, ExperimentKind, Plan};
pub use run::{run_experiment, Assertion, Summary};

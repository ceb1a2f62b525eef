//! Experiment harness: config parsing, suite execution, and reporting.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{CurvePreset, ExperimentConfig, LambdaSpec, PotentialPreset};
pub use report::{CheckResult, RunReport};
pub use suites::{run_suite, Suite};

//! Reproducible experiment harness behind the `cstar-polar` binary.

pub mod config;
pub mod json;
pub mod report;
pub mod scenarios;

pub use config::{ConfigFile, ExperimentConfig, Overrides, Scenario};
pub use report::{EmbeddedCertificate, Report, TrialRecord, TrialStatus};
pub use scenarios::run_scenario;

//! Config-driven experiment driver for `hardy-core`.

pub mod config;
pub mod error;
pub mod run;
pub mod scenarios;

pub use config::{Command, ExperimentConfig};
pub use error::{Category, CliError};
pub use run::{run, Report, RunOutcome};
pub use scenarios::{builtin_scenarios, scenario};

//! Scenario runner for nodal-set experiments: configs, a resumable cell
//! ledger, versioned CSV/JSON outputs and the scenarios themselves.

pub mod config;
pub mod ledger;
pub mod output;
pub mod runner;
pub mod scenarios;

pub use config::{ConfigError, ExperimentConfig, Scenario, SeedRange};
pub use runner::{RunError, RunOptions};
pub use scenarios::{run, Check, Outcome};

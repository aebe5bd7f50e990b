//! Scenario configuration, experiment commands and run manifests for the
//! `capa-isac` batch tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use commands::{run, ArrayType, Command, RunOptions};
pub use config::{load_scenario, parse_scenario, ScenarioConfig};
pub use error::CliError;

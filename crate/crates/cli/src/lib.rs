//! Experiment driver for `steadyfront`: versioned JSON run configs,
//! initial-data generators, the subcommands and their CSV/JSON artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod generators;
pub mod output;

pub use config::RunConfig;
pub use error::{CliError, CliResult};

//! Command-line runner for the zero-extension lab: config parsing and
//! subcommand dispatch, shared by the `zeroext` binary and its tests.

pub mod config;
pub mod error;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{CliError, ConfigError};
pub use run::{run_subcommand, Command, RunReport};

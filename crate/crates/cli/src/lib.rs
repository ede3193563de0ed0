//! Configuration, subcommands and output writers for the `eerds` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

pub use commands::{run_subcommand, Options, Outcome, Subcommand};
pub use config::{parse_config, RunConfig};
pub use error::{CliError, CliResult};

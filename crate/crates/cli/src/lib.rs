//! Command-line front end: configuration, reproduction commands and output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_fig2, cmd_precision, cmd_simulate, cmd_table1};
pub use config::RunConfig;
pub use error::CliError;

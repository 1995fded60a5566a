//! Command implementations behind the `drive-events` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::RunConfig;
pub use error::{CliError, CliResult};

//! Command-line front end: configuration, orchestration and output files.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

pub use config::{parse_config, parse_config_str, RunConfig};
pub use error::CliError;

//! Batch pipeline over `emuopt-core`: each subcommand reads one TOML
//! configuration and writes its artifacts under the configured run directory.

pub mod commands;
pub mod config;

pub use commands::{CliError, CliResult, RunDir};
pub use config::{PipelineConfig, SCHEMA_VERSION};

//! Command-line front end for the `heavytail` experiments.
//!
//! Every command reads a resolved [`ExperimentConfig`], runs the matching
//! library operation and writes a CSV or JSON result carrying a provenance
//! block.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{execute, Outcome, Table};
pub use config::{Command, ExperimentConfig, Format, Key, Kind, Value};
pub use error::CliError;
pub use output::{config_hash, render, Provenance};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "HEAVYTAIL_OUT_DIR";

//! Command-line front end for `damcmc`: TOML-configured runs that write
//! trace CSVs, trace diagnostics, the oracle verification suite and ADDA
//! wall-clock reports.

pub mod cli;
pub mod commands;
pub mod config;
pub mod data;
mod error;
pub mod sample;
pub mod trace_file;

pub use cli::main_with_args;
pub use error::{CliError, CliResult};

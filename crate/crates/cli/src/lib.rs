//! File formats and subcommands of the `lexfuse` tool.
//!
//! Questions and forecast caches are JSON Lines; weights and module
//! configuration are TOML. Every output file is written atomically.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod questions;
pub mod weights;

pub use commands::{run, Cli, Command};
pub use error::{CliError, CliResult};

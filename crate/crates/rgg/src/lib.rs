//! Parallel execution, configuration files, and output records for the
//! `rgg` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod parallel;

pub use error::{CliError, CliResult};
pub use parallel::Parallel;

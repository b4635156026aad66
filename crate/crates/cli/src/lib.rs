//! Command-line front end: CSV ingestion, the `detect`, `crops`,
//! `simulate`, `estimate` and `variance` subcommands, and their JSON and CSV
//! outputs.
//!
//! Exit status is 0 on success, 1 for usage errors, 2 for bad input data and
//! 3 for internal failures.

pub mod args;
pub mod commands;
pub mod document;
pub mod error;
pub mod table;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

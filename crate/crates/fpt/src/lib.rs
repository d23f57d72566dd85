//! Command-line front end for `fpt-core`: JSON increment-law files, a
//! multi-threaded path executor, and reproducible JSON/CSV artifacts.
//!
//! Exit statuses: `0` success, `1` bad input or numerical failure, `2` the
//! requested exponential moment is infinite.

pub mod cli;
pub mod commands;
pub mod error;
pub mod exec;
pub mod report;
pub mod spec_file;
pub mod validate;

pub use cli::run;
pub use error::{CliError, EXIT_ERROR, EXIT_INFINITE, EXIT_OK};

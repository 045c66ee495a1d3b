//! Library side of the `csfmm` command-line tool.

pub mod args;
pub mod commands;
pub mod error;
pub mod fields;
pub mod io;

pub use error::{CliError, CliResult};

//! Std companion to `eso-core`: the coordinate-format matrix reader and
//! writer, the JSON sampling spec format, report serialization, a parallel
//! multi-seed runner and the `eso` command-line tool.

pub mod cli;
pub mod error;
pub mod matrix_io;
pub mod problem;
pub mod reports;
pub mod runner;
pub mod spec_json;

pub use error::{CliError, FormatError};

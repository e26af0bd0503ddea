//! Batch front end: reads a JSON run configuration, wires the data through
//! the core library and writes CSV/JSON reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Overrides, RunConfig};
pub use error::{CliError, Result};

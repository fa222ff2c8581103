//! File formats, parallel execution and the `hue` command line on top of
//! [`hue_core`].

pub mod cli;
pub mod commands;
mod error;
pub mod exec;
pub mod io;
pub mod profile;
pub mod report;

pub use error::{CliError, ExitCode};

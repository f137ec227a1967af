//! Command-line front end for the `hierank` ranking library.

pub mod commands;
pub mod error;
pub mod input;
pub mod output;
pub mod presets;

pub use commands::{run, Cli, Outcome};
pub use error::{CliError, Result};

//! File formats and the command layer of the `vcsp` binary.

pub mod commands;
pub mod format;

pub use commands::{run, Cli, CliError, Command, Status};
pub use format::FormatError;

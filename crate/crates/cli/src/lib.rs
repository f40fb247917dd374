//! Library face of the command-line front end, used by the binary and by
//! the acceptance suite (which drives runs and replays in-process).

pub mod config;
pub mod runner;

pub use config::{geometric_grid, CommandConfig, RunConfig, SpecConfig};
pub use runner::{replay, run, RunOutcome, TOOL_VERSION};

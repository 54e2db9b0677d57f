//! Command-line driver for activated random walk experiments.
//!
//! Settings come from an optional flat `key = value` file and from flags,
//! flags winning. Output is one row per metric and replicate, as CSV or
//! JSON, written to `<out>.partial` and renamed when complete.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config_text, Command, Format, RunConfig};
pub use error::CliError;
pub use output::ResultRow;
pub use run::{compute, run_command, Outcome};

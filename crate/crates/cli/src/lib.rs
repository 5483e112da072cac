//! Driver layer of the toolkit: sweep configuration, grid evaluation, structured output
//! and the diagnostics behind the `ptfid` subcommands.

pub mod config;
pub mod output;
pub mod sweep;
pub mod tools;

pub use config::{ConfigError, SweepConfig};
pub use sweep::{run_sweep, SweepResult};

//! Config parsing, experiment dispatch and report emission for the
//! `split-nls` command.

pub mod config;
pub mod emit;
pub mod error;
pub mod run;
pub mod trajectory_io;

pub use config::{parse_config, ExperimentConfig};
pub use error::CliError;
pub use run::{run_command, Command, RunOutcome};

//! Experiment runner behind the `uwbsim` command.

pub mod error;
pub mod lemmas;
pub mod run;
pub mod spec;

pub use error::{CliError, Result};

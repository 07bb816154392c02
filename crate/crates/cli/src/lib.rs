//! Library side of the `seedtrim` binary: plan layering, subcommands and
//! summary tables.

pub mod commands;
pub mod error;
pub mod plan;
pub mod summary;

pub use error::CliError;
pub use plan::ExperimentPlan;

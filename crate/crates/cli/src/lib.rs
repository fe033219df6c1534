//! Library half of the command-line front end: configuration parsing,
//! artifact emission and the subcommand implementations. The `logsob`
//! binary is a thin argument-parsing shell over this crate so that
//! integration tests can drive the same code paths in-process.

pub mod commands;
pub mod config;
pub mod output;

pub use config::{PotentialSpec, RunConfig};
pub use output::{OutputContext, SCHEMA_VERSION};

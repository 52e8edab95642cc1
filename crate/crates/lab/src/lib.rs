//! Command-line laboratory around `fg-core`: run configuration, artifact
//! files, and the experiments behind the `fg` subcommands.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;

pub use config::RunConfig;
pub use error::LabError;

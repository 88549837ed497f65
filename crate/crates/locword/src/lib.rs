//! Batch front-end for `locword-core`: configuration, a worker pool, run
//! directories with manifests, and CSV/JSON/SVG output.

pub mod cheb;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod executor;
pub mod formats;
pub mod oracle;
pub mod output;
pub mod svg;
pub mod verify;

pub use crate::cli::main_with;
pub use crate::error::{CliError, CliResult, ExitCode};

//! File formats, configuration and command implementations for the
//! `wireframe` binary.

// negated float comparisons reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod pr;

pub use args::Cli;
pub use commands::run;
pub use error::{CliError, CliResult};

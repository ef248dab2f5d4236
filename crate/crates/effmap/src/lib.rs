//! File formats, parallel execution and subcommands for `effmap-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod cycle_csv;
pub mod error;
pub mod exec;
pub mod export;

pub use error::{CliError, Result};

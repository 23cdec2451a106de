//! Command-line front end for `patternlq`: scenario files, the synthesis
//! and simulation pipeline, and its reports (JSON summary, trajectory CSV,
//! SVG snapshots).

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod snapshot;
pub mod sweep;

pub use commands::{execute, Cli, Command};
pub use config::{Mode, Scenario};
pub use error::{CliError, Failure, Stage};

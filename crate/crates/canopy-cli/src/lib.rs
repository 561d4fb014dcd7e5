//! Library surface of the `canopy` command-line tool: file formats, the
//! density-sweep experiment and the subcommand implementations.

// Validation guards use `!(x > 0.0)` so NaN inputs fail too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod formats;
pub mod sweep;

pub use error::{CliError, Result};

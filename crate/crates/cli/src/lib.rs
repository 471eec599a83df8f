//! Configuration, batch drivers and report writers for the `ncentre` tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod error;
pub mod integrals;
pub mod orbit;
pub mod output;
pub mod scatter;

pub use config::{parse_config, RunConfig};
pub use error::{CliError, Result};
pub use ncentre;

//! File formats, configuration and the `qabpnp` command line on top of
//! `qabpnp-core`.

pub mod cache;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod pgm;
pub mod pipeline;
pub mod seed;
pub mod trace;

pub use config::{Method, RunConfig};
pub use error::CliError;

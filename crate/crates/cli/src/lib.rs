//! Library surface of the CLI: configuration, file formats, and the four
//! workflows, kept out of `main.rs` so integration tests can drive them
//! directly.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::{RunConfig, CONFIG_ENV};
pub use error::CliError;

//! Reproducible experiments over `qkd-core`: key-distribution sessions,
//! state tomography, CHSH evaluation and one-time-pad encryption.
//!
//! Every command is a pure function of its configuration and seed, and
//! produces its files in memory ([`commands::Report`]) before anything is
//! written, so output bytes are independent of the filesystem.

pub mod app;
pub mod commands;
pub mod config;
pub mod counts;
pub mod presets;

use std::path::PathBuf;

use qkd_core::QkdError;

pub use config::{Kind, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] QkdError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub(crate) fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const ABORT: i32 = 2;
}

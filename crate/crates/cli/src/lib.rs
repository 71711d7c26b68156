//! Library half of the `gis` command-line tool: scenario files, symbolic
//! vector fields, CSV export and the built-in demo.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod demo;
pub mod export;
pub mod expr;
pub mod run;

use std::path::PathBuf;

use config::ConfigErrors;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("invalid configuration:\n{0}")]
    Config(ConfigErrors),

    #[error(transparent)]
    Numerics(#[from] gis_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for bad input, 3 for numerical or I/O failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Numerics(_) | CliError::Io { .. } => 3,
        }
    }
}

impl From<ConfigErrors> for CliError {
    fn from(e: ConfigErrors) -> Self {
        CliError::Config(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

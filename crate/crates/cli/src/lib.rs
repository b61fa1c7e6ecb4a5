//! Scenario runner around `palatini-core`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod io;
pub mod scenarios;

pub use config::{resolve, Overrides, RunConfig, Scenario};
pub use scenarios::{run, write_artifacts, Check, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("numerical failure: {0}")]
    Numerical(#[from] palatini_core::Error),
    #[error("format error: {0}")]
    Format(String),
}

impl CliError {
    /// 2 for usage problems, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Format(_) => 4,
        }
    }
}

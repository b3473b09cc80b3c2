//! Command-line front end for `lvsmile-core`.
//!
//! Every subcommand resolves a [`config::RunConfig`], writes one CSV table
//! (or a text report for `check`) and a manifest of the resolved settings.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;

/// Exit codes of the binary.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(lvsmile_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => exit::NUMERICAL,
            // unreadable config or unwritable output path: both are bad input
            CliError::Config(_) | CliError::Io { .. } => exit::CONFIG,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<lvsmile_core::Error> for CliError {
    fn from(e: lvsmile_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

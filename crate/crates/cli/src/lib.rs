//! Library side of the `pxc` command-line tool: configuration parsing and the
//! command implementations, kept separate from `main` so they can be tested
//! in-process.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_calibrate, cmd_compare, cmd_deltarho, cmd_oracle, cmd_scf, Options};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 2 for usage and configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<pxc_core::Error> for CliError {
    fn from(e: pxc_core::Error) -> Self {
        match e {
            pxc_core::Error::Io(io) => CliError::Io(io.to_string()),
            e if e.is_usage() => CliError::Usage(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

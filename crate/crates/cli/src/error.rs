use std::io;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Config parse or validation failure.
    #[error("invalid configuration: {0}")]
    Schema(String),

    #[error("{module}: {source}")]
    Numeric {
        module: &'static str,
        #[source]
        source: rydchain::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Schema(_) => ExitCode::from(2),
            CliError::Numeric { .. } => ExitCode::from(3),
            _ => ExitCode::from(1),
        }
    }
}

/// Attach the module name to a library error. Precondition and consistency
/// errors come from configuration values and are reported as schema errors.
pub trait Context<T> {
    fn within(self, module: &'static str) -> Result<T, CliError>;
}

impl<T> Context<T> for rydchain::Result<T> {
    fn within(self, module: &'static str) -> Result<T, CliError> {
        self.map_err(|source| match source {
            rydchain::Error::Domain(msg) | rydchain::Error::Config(msg) => CliError::Schema(format!("{module}: {msg}")),
            source => CliError::Numeric { module, source },
        })
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("domain error: {0}")]
    Domain(#[from] semibroadcast::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Invariant(_) => 3,
            CliError::Domain(_) => 4,
        }
    }
}

/// Errors raised while building the model from a config are config errors.
pub fn config_err(e: semibroadcast::Error) -> CliError {
    CliError::Config(e.to_string())
}

pub type CliResult<T> = std::result::Result<T, CliError>;

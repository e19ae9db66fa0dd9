use choquard_core::ChoquardError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Clap's rendered message; the flag marks `--help`/`--version`.
    #[error("{0}")]
    Clap(String, bool),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Core(#[from] ChoquardError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(_, true) => 0,
            CliError::Usage(_) | CliError::Clap(..) | CliError::Io(_) => 3,
            CliError::Verification(_) => 1,
            CliError::Core(ChoquardError::InvalidArgument(_)) => 3,
            CliError::Numerical(_) | CliError::Core(_) | CliError::Json(_) => 2,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rgg_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Process exit code: 2 for invalid input, 1 for failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

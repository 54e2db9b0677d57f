use arw_core::ArwError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    ConfigSyntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("invalid {key}: {why}")]
    Invalid { key: String, why: String },
    #[error(transparent)]
    Core(#[from] ArwError),
    #[error("{0}")]
    Runtime(ArwError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for anything rejected before a simulation starts, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigSyntax { .. } | CliError::UnknownKey(_) | CliError::Invalid { .. } | CliError::Core(_) => 2,
            _ => 3,
        }
    }
}

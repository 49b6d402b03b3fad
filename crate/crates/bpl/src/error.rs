use std::path::PathBuf;

/// Failures that stop a run before a report exists. All map to exit code 1;
/// failed verification is not an error and is reported through the report.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("cannot read config {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },

    #[error("malformed JSON in {path}: {source}")]
    MalformedJson { path: PathBuf, source: serde_json::Error },

    #[error("invalid parameters: {0}")]
    Params(serde_json::Error),

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] bpl_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

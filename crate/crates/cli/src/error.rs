use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("function spec: {0}")]
    Spec(String),
    #[error("random function specs need a `seed`")]
    MissingSeed,
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] zeroext::Error),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("serializing report: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Errors in the experiment setup map to 2; gate failures are reported separately as 1.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

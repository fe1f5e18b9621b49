use std::path::PathBuf;

/// Failures that stop a run before a report exists. Each maps to its own
/// process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config is not valid JSON: {0}")]
    Parse(String),
    #[error("config does not match the schema: {0}")]
    Schema(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_FAILED_CHECKS: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_SCHEMA: i32 = 4;
pub const EXIT_INVALID: i32 = 5;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io { .. } | CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<split_nls::Error> for CliError {
    fn from(err: split_nls::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("config field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Numerical(#[from] pseudotherm::Error),
    /// A numerical failure at one point of a sweep.
    #[error("{parameter} = {value}: {source}")]
    AtPoint { parameter: String, value: f64, source: Box<CliError> },
    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: usize, message: String },
    /// The run completed but a configured check failed.
    #[error("{} check(s) failed", failures.len())]
    Checks { failures: Vec<String> },
}

/// Machine-readable failure report printed on stderr.
#[derive(Debug, Serialize)]
pub struct FailureSummary {
    pub status: &'static str,
    pub kind: &'static str,
    pub message: String,
    pub failures: Vec<String>,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "config_parse",
            CliError::Invalid { .. } => "config_invalid",
            CliError::Io { .. } => "io",
            CliError::Numerical(_) => "numerical",
            CliError::AtPoint { source, .. } => source.kind(),
            CliError::Csv { .. } => "csv",
            CliError::Checks { .. } => "check_failed",
        }
    }

    pub fn summary(&self) -> FailureSummary {
        let failures = match self {
            CliError::Checks { failures } => failures.clone(),
            _ => vec![],
        };
        FailureSummary { status: "failed", kind: self.kind(), message: self.to_string(), failures }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Invalid { .. } => 2,
            CliError::Io { .. } | CliError::Csv { .. } => 3,
            CliError::Numerical(_) | CliError::AtPoint { .. } => 4,
            CliError::Checks { .. } => 5,
        }
    }
}

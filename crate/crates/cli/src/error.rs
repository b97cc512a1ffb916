use thiserror::Error;

use riskcap::RiskError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at {location}: {message}")]
    FileParse { location: String, message: String },
    #[error("no {kind} named `{name}` in the model")]
    NameNotFound { kind: &'static str, name: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Risk(#[from] RiskError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "Io",
            CliError::FileParse { .. } => "FileParse",
            CliError::NameNotFound { .. } => "NameNotFound",
            CliError::Usage(_) => "Usage",
            CliError::Risk(_) => "Risk",
        }
    }
}

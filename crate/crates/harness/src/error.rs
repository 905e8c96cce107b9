use std::path::PathBuf;

use page_core::{ProblemError, RunError, TheoryError, VerifyError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("config {}: {source}", path.display())]
    Config {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("problem: {0}")]
    Problem(#[from] ProblemError),
    #[error("theory: {0}")]
    Theory(#[from] TheoryError),
    #[error("run failed: {0}")]
    Run(#[from] RunError),
    #[error("check failed: {0}")]
    Verify(#[from] VerifyError),
    #[error("failed checks: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),
}

impl HarnessError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Self::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 1 for failed runs and checks, 2 for anything wrong with the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Run(_) | Self::Verify(_) | Self::ChecksFailed(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

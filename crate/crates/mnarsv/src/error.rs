use std::path::Path;

use serde::Serialize;

/// Failure of a CLI command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input or configuration; exit code 2.
    #[error("{0}")]
    Validation(String),
    /// The sampler failed numerically; exit code 3.
    #[error("{0}")]
    Numerical(String),
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    error: &'a str,
    exit_code: i32,
    message: String,
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// One-line JSON diagnostic for stderr.
    pub fn to_json(&self) -> String {
        let kind = match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
        };
        serde_json::to_string(&Diagnostic { error: kind, exit_code: self.exit_code(), message: self.to_string() })
            .expect("diagnostic serializes")
    }
}

impl From<mnarsv_core::Error> for CliError {
    fn from(e: mnarsv_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

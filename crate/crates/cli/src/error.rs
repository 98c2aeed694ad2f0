use serde::Serialize;

/// Failure of a CLI command, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or usage; exit code 1.
    #[error("{}{message}", path.as_deref().map(|p| format!("{p}: ")).unwrap_or_default())]
    Config { path: Option<String>, message: String },

    /// Failure while computing or writing results; exit code 2.
    #[error(transparent)]
    Runtime(#[from] abcscore_core::Error),
}

#[derive(Serialize)]
struct Report<'a> {
    kind: &'a str,
    path: Option<&'a str>,
    message: String,
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        let path = path.into();
        CliError::Config {
            path: (!path.is_empty()).then_some(path),
            message: message.into(),
        }
    }

    pub fn path(&self) -> Option<&str> {
        match self {
            CliError::Config { path, .. } => path.as_deref(),
            CliError::Runtime(_) => None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            CliError::Runtime(_) => 2,
        }
    }

    /// One-line JSON error report for stderr.
    pub fn report(&self) -> String {
        let (kind, message) = match self {
            CliError::Config { message, .. } => ("config", message.clone()),
            CliError::Runtime(e) => ("runtime", e.to_string()),
        };
        let r = Report {
            kind,
            path: self.path(),
            message,
        };
        serde_json::json!({ "error": r }).to_string()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

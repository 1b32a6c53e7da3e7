/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The configuration is malformed or violates the schema; `path` is a
    /// JSON pointer into the document.
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    /// Iteration failed; `step` is the signed index of the failing step
    /// when known.
    #[error("numerical failure{}: {message}", step.map(|k| format!(" at step {k}")).unwrap_or_default())]
    Numerical { step: Option<i64>, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn config(path: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<cmotion::Error> for CliError {
    fn from(e: cmotion::Error) -> Self {
        CliError::Numerical {
            step: e.index(),
            message: e.root().to_string(),
        }
    }
}

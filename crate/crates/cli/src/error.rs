use thiserror::Error;

/// Failures surfaced by the command line, each with a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Core(#[from] xiboot_core::Error),

    #[error("{0}")]
    Output(String),
}

impl CliError {
    /// 0 success, 1 usage or input, 2 degenerate input, 3 degeneracy
    /// exhausted, 4 configuration mismatch.
    pub fn exit_code(&self) -> i32 {
        use xiboot_core::Error as E;
        match self {
            CliError::Core(E::DegenerateSample) => 2,
            CliError::Core(E::DegeneracyExhausted { .. }) => 3,
            CliError::Core(E::ConfigMismatch(_)) => 4,
            _ => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

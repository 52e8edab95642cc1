use serde::Serialize;

/// Failure of a lab command, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// Invalid configuration (exit 2). `kind` keeps the core tag when the
    /// rejection came from a core constructor.
    #[error("{message}")]
    Config { kind: &'static str, message: String },
    /// A numerical routine failed during the run (exit 3).
    #[error(transparent)]
    Numerical(#[from] fg_core::Error),
    /// The run finished but a check it performs did not pass (exit 4).
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn config(e: fg_core::Error) -> Self {
        LabError::Config { kind: e.kind(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } => 2,
            LabError::Numerical(_) | LabError::Io(_) | LabError::Csv(_) | LabError::Json(_) => 3,
            LabError::Verification(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Config { kind, .. } => kind,
            LabError::Numerical(e) => e.kind(),
            LabError::Verification(_) => "VerificationFailed",
            LabError::Io(_) => "IoError",
            LabError::Csv(_) => "CsvError",
            LabError::Json(_) => "JsonError",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport { error: self.kind(), message: self.to_string(), exit_code: self.exit_code() }
    }
}

/// Machine-readable error printed to stderr and written as `error.json`.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    pub exit_code: i32,
}

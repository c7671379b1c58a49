use thiserror::Error;

/// Errors produced while configuring, running or reporting an audit.
#[derive(Debug, Error)]
pub enum AuditError {
    /// A configuration value is invalid. `path` names the offending field.
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// A value lies outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// Exact enumeration would visit more states than the budget allows.
    #[error("enumeration budget exceeded: {needed} states needed, budget is {budget}")]
    Budget { needed: u128, budget: u64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl AuditError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        AuditError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        AuditError::Domain(message.into())
    }

    /// Process exit code class: 1 config, 3 I/O. Verification failures (2)
    /// are reported by the CLI, not through this type.
    pub fn exit_code(&self) -> i32 {
        match self {
            AuditError::Io(_) | AuditError::Serialize(_) => 3,
            _ => 1,
        }
    }
}

impl From<csv::Error> for AuditError {
    fn from(err: csv::Error) -> Self {
        AuditError::Serialize(err.to_string())
    }
}

impl From<serde_json::Error> for AuditError {
    fn from(err: serde_json::Error) -> Self {
        AuditError::Serialize(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, AuditError>;

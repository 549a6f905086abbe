use serde::Serialize;
use serde_json::Value;

/// Machine-readable failure, printed as one JSON line on stderr.
#[derive(Debug, Clone, Serialize, thiserror::Error)]
#[error("{code} ({module}): {message}")]
pub struct CliError {
    pub code: String,
    pub module: String,
    pub message: String,
    pub context: Value,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: "CONFIG_INVALID".into(),
            module: "cli".into(),
            message: message.into(),
            context: Value::Null,
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError {
            code: "IO_ERROR".into(),
            module: "cli".into(),
            message: err.to_string(),
            context: serde_json::json!({ "path": path.display().to_string() }),
        }
    }

    pub fn with_context(mut self, context: Value) -> Self {
        self.context = context;
        self
    }

    /// Exit status: 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.code == "CONFIG_INVALID" {
            2
        } else {
            1
        }
    }
}

impl From<quadprop::Error> for CliError {
    fn from(e: quadprop::Error) -> Self {
        CliError {
            code: e.code().into(),
            module: e.module().into(),
            message: e.to_string(),
            context: Value::Null,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

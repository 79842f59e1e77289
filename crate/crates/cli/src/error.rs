use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", key.as_ref().map(|k| format!(" at `{k}`")).unwrap_or_default())]
    Config {
        key: Option<String>,
        line: Option<usize>,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Input { path: String, line: usize, message: String },
    #[error(transparent)]
    Core(#[from] msrr_core::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "ConfigError",
            CliError::Io { .. } => "IoError",
            CliError::Input { .. } => "InputError",
            CliError::Core(e) => e.kind(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }

    /// Single-line JSON description for stderr.
    pub fn to_json(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        match self {
            CliError::Config { key, line, .. } => {
                v["key"] = json!(key);
                v["line"] = json!(line);
            }
            CliError::Input { path, line, .. } => {
                v["path"] = json!(path);
                v["line"] = json!(line);
            }
            CliError::Io { path, .. } => v["path"] = json!(path),
            CliError::Core(_) => {}
        }
        v
    }
}

macro_rules! core_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        })*
    };
}

core_from!(
    msrr_core::geometry::GeometryError,
    msrr_core::circuit::CircuitError,
    msrr_core::fieldmap::FieldError,
    msrr_core::design::DesignError,
    msrr_core::metrology::MetrologyError,
    msrr_core::budget::BudgetError
);

use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    Run(#[from] heavytail::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Results were written but too many replicates diverged.
    #[error("diverged fraction {fraction} exceeds max_diverged = {limit}")]
    Diverged { fraction: f64, limit: f64 },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Run(e) if is_parameter_error(e) => 2,
            CliError::Run(_) | CliError::Io { .. } => 1,
            CliError::Diverged { .. } => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config",
            CliError::Run(e) if is_parameter_error(e) => "parameter",
            CliError::Run(_) => "run",
            CliError::Io { .. } => "io",
            CliError::Diverged { .. } => "diverged",
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        let mut record = json!({
            "error": self.kind(),
            "status": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Config { key, .. } = self {
            record["key"] = json!(key);
        }
        record.to_string()
    }
}

fn is_parameter_error(e: &heavytail::Error) -> bool {
    matches!(
        e,
        heavytail::Error::Domain { .. } | heavytail::Error::InvalidParameter(_) | heavytail::Error::Shape { .. }
    )
}

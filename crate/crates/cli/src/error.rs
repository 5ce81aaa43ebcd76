use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("column '{0}' not found in the data header")]
    MissingColumn(String),

    #[error("model fit failed: {0}")]
    Fit(String),

    #[error("{0}")]
    Io(String),

    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::MissingColumn(_) => {
                ExitCode::from(2)
            }
            CliError::Fit(_) => ExitCode::from(3),
            CliError::Io(_) | CliError::Run(_) => ExitCode::from(1),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

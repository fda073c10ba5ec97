use photocount_core::Error as CoreError;

/// Failure of a CLI run, mapped to the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("approximation breakdown [{flag}]: {detail}")]
    Breakdown { flag: String, detail: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Config(_) => 2,
            CliError::Breakdown { .. } => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. } => CliError::Config(e.to_string()),
            CoreError::Breakdown { flag, detail } => CliError::Breakdown { flag: flag.into(), detail: detail.into() },
            CoreError::NotSeparable(detail) => CliError::Breakdown { flag: "not_separable".into(), detail: detail.into() },
            CoreError::InfiniteDivergence(detail) => {
                CliError::Breakdown { flag: "infinite_divergence".into(), detail: detail.into() }
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

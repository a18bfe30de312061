use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation or config schema violation.
    #[error("usage error: {0}")]
    Usage(String),
    /// A checker, invariant or run failed.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl From<landau_core::Error> for CliError {
    fn from(e: landau_core::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

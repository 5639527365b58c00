use thiserror::Error;

/// Failures of a CLI run, each tied to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files.
    #[error("{0}")]
    Config(String),

    /// A numerical invariant failed during the run.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<sympass_core::Error> for CliError {
    fn from(e: sympass_core::Error) -> Self {
        use sympass_core::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::InvalidDomain(_)
            | E::GridNotIncreasing
            | E::LambdaOutOfRange { .. }
            | E::Parse(_)
            | E::DimensionMismatch { .. } => CliError::Config(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o error: {e}"))
    }
}

use wdistill_core::Error as CoreError;

/// Failure of a CLI command, carrying the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable input or unwritable output.
    #[error("usage error: {0}")]
    Usage(String),
    /// The W′ specification itself is unacceptable.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    /// A simulation result breached its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::InvalidSpec(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::DegenerateCoefficient { .. }
            | CoreError::NotNormalized { .. }
            | CoreError::MinIndexStep { .. }
            | CoreError::Validation(_)
            | CoreError::TooLarge { .. } => CliError::InvalidSpec(e.to_string()),
            CoreError::Shape(_)
            | CoreError::Index(_)
            | CoreError::OffResonance { .. }
            | CoreError::Truncation { .. }
            | CoreError::Contract(_)
            | CoreError::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Schema or validation failure; the message names the offending field.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Simulation(#[from] fermon::Error),

    /// A run finished but failed its own checks.
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    /// Short machine-readable tag recorded in the manifest.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Simulation(fermon::Error::AnnihilatedTrajectory { .. }) => "annihilated_trajectory",
            CliError::Simulation(fermon::Error::InsufficientRealizations { .. }) => "insufficient_realizations",
            CliError::Simulation(fermon::Error::InvariantViolation(_)) => "invariant_violation",
            CliError::Simulation(_) => "simulation",
            CliError::Check(_) => "check",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

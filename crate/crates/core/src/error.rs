use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The selected branch has (numerically) zero probability on this state.
    #[error("annihilated trajectory: branch weight {weight:e} below threshold")]
    AnnihilatedTrajectory { weight: f64 },

    #[error("ill-conditioned contraction (inner matrix singular, rcond {rcond:e})")]
    IllConditioned { rcond: f64 },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("state too mixed to purify: smallest |pi| = {min_pi}")]
    TooMixed { min_pi: f64 },

    #[error("post-selection impossible: both retained branch weights vanish")]
    PostSelectionImpossible,

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("insufficient realizations: {got} < {required}")]
    InsufficientRealizations { got: usize, required: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

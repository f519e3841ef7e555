use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("digit prefix exhausted: needed {needed} digits, have {available}")]
    PrefixExhausted { needed: usize, available: usize },

    #[error("window insufficient: {0}")]
    WindowInsufficient(String),

    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),

    #[error("cannot normalize set: {0}")]
    Normalization(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::WindowInsufficient(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical routines and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no bracket for Psi^-1({y}) below the overflow probe")]
    NoBracket { y: f64 },

    #[error("{0}")]
    NotConverged(String),

    #[error("no preimage solver for symbol kind `{kind}`")]
    NoSolver { kind: String },

    #[error("resolution floor: {0}")]
    ResolutionFloor(String),

    #[error("statistical floor violated: {0}")]
    StatisticalFloor(String),

    #[error("walk did not terminate after {steps} steps from {start}")]
    NonTerminating { steps: u64, start: String },

    #[error("domain containment check failed: {0}")]
    Containment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status used by the CLI: 2 for configuration problems,
    /// 3 for numerical failures, 4 for statistical floor violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::Json(_) | Error::Io(_) => 2,
            Error::StatisticalFloor(_) => 4,
            Error::NoBracket { .. }
            | Error::NotConverged(_)
            | Error::NoSolver { .. }
            | Error::ResolutionFloor(_)
            | Error::NonTerminating { .. }
            | Error::Containment(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

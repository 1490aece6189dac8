use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ball leaves the sampled domain: {0}")]
    BallOutsideDomain(String),

    #[error("support margin violated: {0}")]
    MarginViolation(String),

    #[error("degenerate norm: rejection acceptance rate {rate:e} after {attempts} draws")]
    DegenerateNorm { rate: f64, attempts: u64 },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("unknown corpus id `{0}`")]
    UnknownCorpus(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit status: 3 for numerical failures, 2 for everything the
    /// caller can fix by changing the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence(_) | Error::Overflow(_) | Error::DegenerateNorm { .. } => 3,
            _ => 2,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate boundary point: |grad| = {gradient_norm:e}")]
    DegenerateBoundary { gradient_norm: f64 },

    #[error("root solve failed: {0}")]
    RootSolve(String),

    #[error("numeric budget exceeded: {0}")]
    Budget(String),

    #[error("singular design matrix: {0}")]
    SingularFit(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("prediction undecidable: {0}")]
    Undecidable(String),

    #[error("lattice point {point:?} could not be certified")]
    Uncertified { point: Vec<i64> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status the CLI uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::DimensionMismatch { .. } => 2,
            Error::Json(_) => 2,
            Error::Budget(_) => 3,
            _ => 3,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-finite entries in {0}")]
    NonFinite(String),

    #[error("not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("trace {found} differs from target {target}")]
    TraceMismatch { found: f64, target: f64 },

    #[error("rank {rank} out of range 1..={dim}")]
    RankOutOfRange { rank: usize, dim: usize },

    #[error("operator effects span {rank} of {needed} real dimensions of Herm(N)")]
    RankDeficient { rank: usize, needed: usize },

    #[error("negative measurement value {value} at ({row}, {col})")]
    NegativeData { row: usize, col: usize, value: f64 },

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("step size {0:.3e} produced a vanishing normalization")]
    StepSize(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

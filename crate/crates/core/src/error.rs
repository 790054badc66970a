use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh argument: {0}")]
    InvalidArgument(String),
    #[error("invalid cell: {0}")]
    InvalidCell(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),

    /// A pivot of the Cholesky factorization fell below `1e-14 * max_diag`.
    #[error("singular system: pivot {pivot:e} at row {row} (largest diagonal {max_diag:e})")]
    SingularSystem { row: usize, pivot: f64, max_diag: f64 },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Objective evaluation failed; carries the coefficient that caused it.
    #[error("evaluation failed: {source}")]
    Evaluation {
        #[source]
        source: Box<Error>,
        q_snapshot: Vec<f64>,
    },

    #[error("no sign change of the discrepancy in [{lo:e}, {hi:e}] (f = {f_lo:e}, {f_hi:e})")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

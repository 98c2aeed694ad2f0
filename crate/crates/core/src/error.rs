use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Cholesky or LU factorization hit a non-positive (or zero) pivot.
    #[error("matrix decomposition failed at pivot {pivot} (value {value:e})")]
    Decomposition { pivot: usize, value: f64 },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs by {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// A log-likelihood evaluation inside a finite-difference stencil was not finite.
    #[error("non-finite objective while differentiating coordinate {coordinate} at {theta:?}")]
    Evaluation { coordinate: usize, theta: Vec<f64> },

    #[error("no convergence after {evaluations} evaluations (score norm {score_norm:e})")]
    Convergence {
        best: Vec<f64>,
        evaluations: usize,
        score_norm: f64,
    },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Row/column addressed data error (1-based rows, header is row 1).
    #[error("{file}: row {row}, column {column}: {message}")]
    Data {
        file: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

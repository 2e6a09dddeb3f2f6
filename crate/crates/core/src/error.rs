use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polyline: {0}")]
    InvalidPolyline(String),

    #[error("point {value} lies outside the domain [{lo}, {hi}]")]
    OutsideDomain { value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The reduced Newton matrix `(I-G)∇f + G` is numerically singular.
    #[error("singular Newton system (smallest pivot {pivot:e}, threshold {threshold:e})")]
    SingularSystem { pivot: f64, threshold: f64 },

    #[error("resolvent of f did not converge in {iterations} iterations (residual {residual:e})")]
    InnerSolveFailure { iterations: usize, residual: f64 },

    #[error("no admissible gamma found after {0} doublings")]
    GammaSearchFailure(usize),

    #[error("line search failed after {0} backtracking steps")]
    LineSearchFailure(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid problem description: {0}")]
    InvalidProblem(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

/// Failure modes shared by the linear-algebra kernels and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigen solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is numerically rank deficient: {0}")]
    RankDeficient(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("degenerate solution: leading augmented coordinate {0:.3e} is too close to zero")]
    DegenerateSolution(f64),
    #[error("unknown solver `{0}`")]
    UnknownSolver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

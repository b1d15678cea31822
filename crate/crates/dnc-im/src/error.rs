//! Error types shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The g-and-k quantile function is not strictly increasing at the
    /// requested parameter point.
    #[error("g-and-k quantile function is not monotone: {0}")]
    NonMonotoneQuantile(String),

    /// Numerical quadrature did not converge.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// Likelihood maximization failed after exhausting the restart budget.
    #[error("optimization failed after {restarts} restarts: {reason}")]
    OptimFailure { restarts: usize, reason: String },

    /// The observed information matrix has an eigenvalue at or below the
    /// positive-definiteness floor.
    #[error("observed information not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    /// The total information matrix is numerically singular.
    #[error("total information numerically singular (condition number {cond:.3e})")]
    SingularInformation { cond: f64 },

    /// The validification re-draw budget was exhausted.
    #[error("simulation budget exceeded: {attempts} attempts for {target} Monte Carlo samples")]
    SimulationBudgetExceeded { attempts: usize, target: usize },

    /// The requested operation has no implementation for this model family.
    #[error("unsupported model for this operation: {0}")]
    UnsupportedModel(String),

    /// A hypothesis set contained no points.
    #[error("hypothesis set is empty")]
    EmptyHypothesis,

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Invalid experiment or command configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed input file.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code class: 2 for configuration/input problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Io(_) | Error::Json(_) => 2,
            _ => 3,
        }
    }
}

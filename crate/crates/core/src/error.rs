use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed structurally inconsistent arguments (mismatched jets,
    /// out-of-range indices, budgets exceeded).
    #[error("usage error: {0}")]
    Usage(String),

    /// Input data violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Division by a jet whose constant term is (numerically) zero.
    #[error("division by singular jet at x = {center}: constant term {value:e}")]
    SingularJet { center: f64, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: exponent overflow (|k*x| = {kx:e})")]
    Range { kx: f64 },

    /// A Wronskian used as a Darboux denominator vanishes.
    #[error("singular transformation: Wronskian vanishes at x = {x}")]
    Singularity { x: f64 },

    /// The Abraham-Moses overlap matrix is not positive definite.
    #[error("regularity error at x = {x}: {reason}")]
    Regularity { x: f64, reason: String },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("domain too small: |U| = {value:e} at x = {x} (needs < {threshold:e})")]
    DomainTooSmall { x: f64, value: f64, threshold: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the caller's input rather than by the
    /// numerics themselves.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Usage(_) | Error::Validation(_) | Error::Io(_) | Error::Json(_)
        )
    }
}

use thiserror::Error;

/// Failure modes shared by the group, averaging and filtering code.
///
/// Numeric payloads are widened to `f64` so the error type does not depend
/// on the scalar in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rotation logarithm is ambiguous at angle {angle}; candidate axes {axes:?}")]
    AmbiguousLog { angle: f64, axes: [[f64; 3]; 2] },

    #[error("jacobian inverse is singular at rotation angle {angle}")]
    SingularJacobian { angle: f64 },

    #[error("gimbal lock: pitch {pitch} rad is too close to +-pi/2")]
    GimbalLock { pitch: f64 },

    #[error("no convergence after {iterations} iterations (residual norm {residual})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("covariance is not symmetric positive semidefinite: {0}")]
    InvalidCovariance(String),

    #[error("measurement rejected by gate: squared Mahalanobis distance {distance} > {threshold}")]
    MeasurementRejected { distance: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, LieError>;

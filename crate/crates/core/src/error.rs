use thiserror::Error;

/// Errors raised by the geometric primitives, flows, and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not antisymmetric (symmetric part norm {0:e})")]
    NotAntisymmetric(f64),

    #[error("invalid metric tensor: {0}")]
    InvalidMetric(String),

    #[error("matrix is not a rotation (orthonormality defect {defect:e}, det {det})")]
    NotRotation { defect: f64, det: f64 },

    #[error("point is not on the unit sphere (|norm - 1| = {0:e})")]
    NotUnit(f64),

    #[error("vector is not tangent at the base point (|x.v| = {0:e})")]
    NotTangent(f64),

    #[error("algebra element is not horizontal at the base point (|xi.x| = {0:e})")]
    NotHorizontal(f64),

    #[error("operation requires the bi-invariant (identity) metric")]
    NotBiInvariant,

    #[error("state invariant violated: {0}")]
    InvariantViolation(String),

    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("time grid is not uniform at sample {0}")]
    NonUniformGrid(usize),

    #[error("invalid time stepping: {0}")]
    InvalidStep(String),

    #[error("non-finite state encountered; last valid time {t_last}")]
    NonFinite { t_last: f64 },

    #[error("initial group element projects {0:e} away from the curve's initial point")]
    MismatchedInitialPoint(f64),

    #[error("chart failure: {0}")]
    ChartFailure(String),

    #[error("boundary-value problem is posed on the wrong space (expected {0})")]
    WrongSpace(&'static str),

    #[error("segment {index} did not converge (terminal error {terminal_error:e})")]
    SegmentNotConverged { index: usize, terminal_error: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

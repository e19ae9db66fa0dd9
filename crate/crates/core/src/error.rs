use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChoquardError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("no matching point: {0}")]
    NoMatchingPoint(String),

    /// A nonlinearity evaluation hit the exp(γ₀t²) overflow guard.
    #[error(
        "energy overflow at node {node}: amplitude {amplitude:.6e} exceeds the exponential guard"
    )]
    EnergyOverflow { node: usize, amplitude: f64 },

    #[error("projection failed: {0}")]
    ProjectionFailed(String),

    #[error("monotonicity violation: {0}")]
    MonotonicityViolation(String),

    #[error("grid too coarse: {0}")]
    ResolutionError(String),

    #[error("scan overflow: {0}")]
    ScanOverflow(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("kernel cache: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, ChoquardError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ChoquardError::InvalidArgument(msg.into()))
}

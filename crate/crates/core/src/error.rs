use thiserror::Error;

/// Every fallible operation in the crate returns this error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DtcError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("not tabulated: {0}")]
    NotTabulated(String),
    #[error("unsupported milestone: {0}")]
    UnsupportedMilestone(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("finite-difference step too small: {0}")]
    StepSize(String),
    #[error("degenerate information matrix: determinant {0:e} is not positive")]
    DegenerateInformation(f64),
    #[error("non-positive input: {0}")]
    NonPositive(String),
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for DtcError {
    fn from(e: std::io::Error) -> Self {
        DtcError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DtcError>;

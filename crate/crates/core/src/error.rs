use thiserror::Error;

pub type Result<T> = std::result::Result<T, CocoError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CocoError {
    #[error("empty comparator")]
    EmptyComparator,

    #[error("empty run")]
    EmptyRun,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("negative CCV state: {0}")]
    NegativeCcvState(f64),

    #[error("negative path length: {0}")]
    NegativePathLength(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("projection did not converge (residual {residual:e})")]
    ProjectionNotConverged { residual: f64 },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("empty intersection (residual {residual:e})")]
    EmptyIntersection { residual: f64 },

    #[error("empty grid-region intersection")]
    EmptyGridRegion,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

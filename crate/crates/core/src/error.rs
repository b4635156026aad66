use thiserror::Error;

/// Errors raised while validating inputs or running the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsorted data: x must be strictly increasing (x[{index}] = {prev} is not below x[{}] = {next})", index + 1)]
    UnsortedData { index: usize, prev: f64, next: f64 },

    #[error("invalid noise scale: sd[{index}] = {value} must be positive and finite")]
    InvalidNoiseScale { index: usize, value: f64 },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-finite value in {field} at index {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid penalty: beta = {0} must be positive and finite")]
    InvalidPenalty(f64),

    #[error("invalid minimum segment length: {0} must be non-negative and finite")]
    InvalidMinSegLen(f64),

    #[error("invalid penalty range: need 0 < beta_min <= beta_max, got [{min}, {max}]")]
    InvalidPenaltyRange { min: f64, max: f64 },

    #[error("invalid segment: grid indices ({k}, {l}) must satisfy 1 <= k < l <= {n}")]
    InvalidSegment { k: usize, l: usize, n: usize },

    #[error("unbounded elimination: segment and piece leave the inner minimisation unbounded")]
    UnboundedElimination,

    #[error("non-convex piece: quadratic coefficient {0} is negative or the piece is unbounded below")]
    NonConvexPiece(f64),

    #[error("empty envelope")]
    EmptyEnvelope,

    #[error("broken provenance chain at grid index {0}")]
    BrokenProvenance(usize),

    #[error("degenerate residuals: all residuals are zero")]
    DegenerateResiduals,
}

pub type Result<T> = std::result::Result<T, Error>;

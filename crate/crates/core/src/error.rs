use thiserror::Error;

/// Errors raised by the lab's numerical operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid too narrow: kernel mass captured on the grid is {captured:.3e} (need at least {required:.3e})")]
    Truncation { captured: f64, required: f64 },

    #[error("density is not normalized: mass {mass:.12}")]
    NotNormalized { mass: f64 },

    #[error("density must be strictly positive: {0}")]
    NonPositiveDensity(String),

    #[error("degenerate cumulative distribution: {0}")]
    DegenerateCdf(String),

    #[error("Crank-Nicolson evolution became unstable: minimum density {min:.3e}")]
    Unstable { min: f64 },

    #[error("instance too large: {nodes} nodes (limit {limit})")]
    TooLarge { nodes: usize, limit: usize },

    #[error("evaluation window too close to the grid edge: {0}")]
    WindowTooWide(String),

    #[error("trajectory left the padded region at step {step} (position {position})")]
    TrajectoryEscaped { step: usize, position: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> LabError {
    LabError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

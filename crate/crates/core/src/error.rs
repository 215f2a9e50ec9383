use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid layer {index}: {reason}")]
    InvalidLayer { index: usize, reason: String },

    #[error("non-finite weight in layer {layer}")]
    NonFiniteWeight { layer: usize },

    #[error("value {0} is not a dyadic rational")]
    NonDyadic(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("value {value} outside domain {domain}")]
    OutOfDomain { value: f64, domain: String },

    #[error("codeword {0} is not on the dyadic grid")]
    OffGrid(f64),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("target evaluation failed: {0}")]
    Target(String),

    #[error("unsupported activation {0} for exact piecewise-linear propagation")]
    UnsupportedActivation(&'static str),

    #[error("point lies on the barrier")]
    OnBarrier,

    #[error("ray parity disagrees across directions; barrier is not a closed loop")]
    InconsistentParity,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

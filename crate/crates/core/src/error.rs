use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not an isometry (max deviation {0:.3e})")]
    NotIsometry(f64),
    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
    #[error("channel is not trace preserving (max violation {0:.3e})")]
    NotTracePreserving(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unknown symbol: {0}")]
    UnknownSymbol(String),
    #[error("emission dimension {have} is smaller than the {need} required")]
    EmissionTooSmall { have: usize, need: usize },
    #[error("no fixed point found (smallest residual singular value {0:.3e})")]
    NoFixedPoint(f64),
    #[error("table too large: {0}")]
    TooLarge(String),
    #[error("circuit has unbound parameter slot {0}")]
    UnboundParameter(usize),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("unknown optimizer label: {0}")]
    UnknownOptimizer(String),
    #[error("design b (carried emission register) has no stationary Kraus family")]
    CarriedEmission,
    #[error("empty input: {0}")]
    Empty(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

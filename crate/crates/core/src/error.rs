use thiserror::Error;

/// Errors raised by path construction, calculus probes and hedging routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid partition ladder: {0}")]
    InvalidLadder(String),

    #[error("ladder level {level} not available (levels {first}..={last})")]
    LevelOutOfRange { level: usize, first: usize, last: usize },

    #[error("inadmissible perturbation at t={t}: x(t-)={left}, e={bump} leaves the positive cone")]
    InadmissiblePerturbation { t: f64, left: f64, bump: f64 },

    #[error("spot {spot} at t={t} outside the open scenario band ({a}, {b})")]
    OutOfBounds { t: f64, spot: f64, a: f64, b: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("payoff is not vertically affine: {0}")]
    NotAffine(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

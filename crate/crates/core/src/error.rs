use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("detailed balance violated at ({x}, {y}): |q_xy mu_x - q_yx mu_y| = {violation:e}")]
    NotReversible { x: usize, y: usize, violation: f64 },

    #[error("kernel is reducible: {components} communicating classes")]
    Reducible { components: usize, classes: Vec<Vec<usize>> },

    #[error("state space too large: {states} states (limit {limit})")]
    TooLarge { states: usize, limit: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("evaluation error: a({s}) = {value}")]
    Evaluation { s: f64, value: f64 },
    #[error("structure violation: {0}")]
    Structure(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("size mismatch: expected {expected:?}, got {got:?}")]
    SizeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("solver did not converge after {iterations} iterations (update {update:.3e}, residual {residual:.3e}, epsilon {epsilon:.3e})")]
    NoConvergence {
        iterations: usize,
        update: f64,
        residual: f64,
        epsilon: f64,
    },
    #[error("oracle error: {0}")]
    Oracle(String),
    #[error("level error: {0}")]
    Level(String),
    #[error("critical proximity: |grad u| = {value:.3e} below floor {floor:.3e}")]
    CriticalProximity { value: f64, floor: f64 },
    #[error("stream error: {0}")]
    Stream(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid metric: {0}")]
    MetricValidity(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("trajectory left the end chart at t = {t}")]
    ChartExit { t: f64 },
    #[error("step size underflow at t = {t} (stiff or singular flow)")]
    StepUnderflow { t: f64 },
    #[error("accuracy budget exceeded: dt = {dt:e}, required dt <= {required:e}")]
    Budget { dt: f64, required: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("support leaves the grid: {0}")]
    Truncation(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by grid construction, spectral operators and experiments.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("fields live on different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),

    #[error("resolution failure: {0}")]
    Resolution(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("boundary decay check failed: edge amplitude {ratio:.3e} of peak exceeds {limit:.1e}")]
    BoundaryDecay { ratio: f64, limit: f64 },

    #[error("time {t} outside trace range [{t0}, {t1}]")]
    TimeRange { t: f64, t0: f64, t1: f64 },

    #[error("solution blew up at step {step}: L2 norm {norm:.3e} exceeds 1e6 x initial")]
    BlowUp { step: usize, norm: f64 },

    #[error("invalid nonlinearity spec: {0}")]
    Spec(String),

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

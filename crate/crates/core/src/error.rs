use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("degenerate spectrum: minimal eigenphase gap {min_gap:e} below tolerance {tolerance:e}")]
    Degenerate { min_gap: f64, tolerance: f64 },

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("requested time {requested} exceeds correlation horizon {horizon}")]
    Horizon { requested: usize, horizon: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model evaluation produced a non-finite value at theta={theta:?}, d={design:?}")]
    ModelEvaluation { theta: Vec<f64>, design: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("MCMC initialization failed: {0}")]
    Initialization(String),

    #[error("diagnostic unavailable: {0}")]
    Diagnostic(String),

    #[error("KDE fit failed: {0}")]
    KdeFit(String),

    #[error("bandwidth selection failed: {0}")]
    Bandwidth(String),

    #[error("EIG estimation failed at outer iteration {outer}: {reason}")]
    Estimation { outer: usize, reason: String },

    #[error("unsupported parameter dimension {0} (grid reference needs n_theta <= 2)")]
    UnsupportedDimension(usize),

    #[error("GP fit failed: {0}")]
    GpFit(String),

    #[error("point {point:?} outside domain: {what}")]
    Domain { what: &'static str, point: Vec<f64> },

    #[error("PDE solver failure: {0}")]
    Solver(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

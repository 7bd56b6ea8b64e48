use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("grid {fine} is not commensurate with grid {coarse}")]
    NotCommensurate { fine: String, coarse: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("negative density {value:e} at point {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error(
        "non-decaying Poisson source: boundary max |f| = {boundary:e}, interior max |f| = {interior:e} (use force to override)"
    )]
    NonDecayingSource { boundary: f64, interior: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residuals {residuals:?})")]
    EigenNotConverged {
        solver: &'static str,
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("SCF did not converge after {iterations} iterations (last density change {density_change:e}, eigenvalue drift {eig_drift:e})")]
    ScfNotConverged {
        iterations: usize,
        density_change: f64,
        eig_drift: f64,
        history: Vec<crate::kohn_sham::ScfRecord>,
    },

    #[error("I metric undefined: both density differences are identically zero")]
    ZeroMetric,

    #[error("reference insensitive to eta_c (I varies by {spread:e} over the scan)")]
    FlatScan { spread: f64 },

    #[error("calibration runner failed at eta_c = {eta}: {source}")]
    Runner {
        eta: f64,
        #[source]
        source: Box<Error>,
        partial: Box<crate::compare::CalibrationTrace>,
    },

    #[error("dense eigensolver failed: {0}")]
    Dense(String),

    #[error("malformed grid file {path}: {msg}")]
    GridFile { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by inconsistent inputs rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::GridMismatch { .. }
                | Error::NotCommensurate { .. }
                | Error::InvalidInput(_)
                | Error::GridFile { .. }
        )
    }
}

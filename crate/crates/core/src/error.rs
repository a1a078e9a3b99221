use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("problem size {requested} exceeds the configured maximum of {max} sites")]
    Capacity { requested: usize, max: usize },

    #[error("sample geometry is empty")]
    EmptyCloud,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("objects live on different site clouds")]
    CloudMismatch,

    #[error(
        "fermi energy {energy} is not in a spectral gap (distance {distance:.3e} to the nearest eigenvalue; nearest gap {nearest_gap:?})"
    )]
    GapViolation {
        energy: f64,
        distance: f64,
        nearest_gap: Option<(f64, f64)>,
    },

    #[error("idempotency defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    NotIdempotent { defect: f64, tolerance: f64 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("band gap {gap_index} closes in the Brillouin zone (lower band max {lower_max}, upper band min {upper_min})")]
    GapClosed {
        gap_index: usize,
        lower_max: f64,
        upper_min: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

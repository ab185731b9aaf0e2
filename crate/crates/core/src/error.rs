use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("index {index} out of range {range}")]
    Index { index: i64, range: String },

    /// The hub coordinate z₁[n] is too small to anchor the per-instant solve.
    #[error("hub coordinate vanishes at n = {n} (|z1| = {magnitude:.3e}, threshold {threshold:.3e})")]
    HubVanishing {
        n: usize,
        magnitude: f64,
        threshold: f64,
    },

    /// The cross term z₁[n]·conj(z₁[n-1]) is too small to carry a phase.
    #[error("phase propagation breaks down at n = {n} (|w| = {magnitude:.3e}, threshold {threshold:.3e})")]
    PropagationBreakdown {
        n: usize,
        magnitude: f64,
        threshold: f64,
    },

    #[error("inconsistent measurements: {0}")]
    Inconsistent(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("support search needs {subsets} subsets (limit {limit}); use the `somp` strategy")]
    Scale { subsets: u128, limit: u128 },

    #[error("degenerate metric: reference signal has zero norm")]
    DegenerateMetric,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Attaches the time index to per-instant failures that were raised
    /// without one.
    pub fn at_instant(self, at: usize) -> Self {
        match self {
            Error::HubVanishing {
                magnitude,
                threshold,
                ..
            } => Error::HubVanishing {
                n: at,
                magnitude,
                threshold,
            },
            Error::PropagationBreakdown {
                magnitude,
                threshold,
                ..
            } => Error::PropagationBreakdown {
                n: at,
                magnitude,
                threshold,
            },
            Error::Inconsistent(msg) => Error::Inconsistent(format!("n = {at}: {msg}")),
            other => other,
        }
    }

    /// Time index carried by a hub or propagation failure, if any.
    pub fn instant(&self) -> Option<usize> {
        match self {
            Error::HubVanishing { n, .. } | Error::PropagationBreakdown { n, .. } => Some(*n),
            _ => None,
        }
    }
}

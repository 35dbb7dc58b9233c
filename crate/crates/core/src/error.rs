use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("wavepacket width must be positive and finite, got {0}")]
    InvalidWidth(f64),

    #[error("wavepacket widths differ: {0} vs {1}")]
    WidthMismatch(f64, f64),

    #[error("a Gaussian sum needs at least one finite component")]
    EmptyState,

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("moment order {0} is not supported")]
    UnsupportedMomentOrder(u32),

    #[error("probe angle {0} is outside [0, pi/2]")]
    InvalidAngle(f64),

    #[error("coupling {0} is invalid: couplings must be finite and non-negative")]
    InvalidCoupling(f64),

    #[error("channel realization has no events")]
    EmptyRealization,

    #[error("invalid noise alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("configuration contains no events")]
    EmptyConfiguration,

    #[error("invalid detector geometry: {0}")]
    InvalidGeometry(String),

    #[error("{overflow} of {total} positions fell outside the detector (limit 1%)")]
    DetectorOverflow { overflow: u64, total: u64 },

    #[error("histogram has no counts")]
    EmptyHistogram,

    #[error("density cannot be sampled: {0}")]
    DegenerateDensity(String),

    #[error("no candidate configurations to search")]
    NoCandidates,

    #[error("no candidate mean within {tolerance} of {mean} after {widenings} widenings")]
    NoCandidateWithinTolerance { mean: f64, tolerance: f64, widenings: u32 },

    #[error("invalid counts: {successes} successes out of {total}")]
    InvalidCounts { successes: u64, total: u64 },

    #[error("credible level {0} must lie in (0, 1)")]
    InvalidLevel(f64),

    #[error("inconsistent trials: {0}")]
    InconsistentTrials(String),

    #[error("target survival {target} is unattainable (must lie strictly between {floor} and 1)")]
    UnattainableTarget { target: f64, floor: f64 },

    #[error("ensemble size must be at least one")]
    EmptyEnsemble,

    #[error("scaling report needs at least one event count")]
    EmptyEventCounts,

    #[error("{source_name}, row {row}: {message}")]
    Csv {
        source_name: String,
        row: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

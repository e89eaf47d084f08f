use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("coefficients are not Hermitian-symmetric at frequency {0:?}")]
    NotHermitian(Vec<i64>),

    #[error("system is not closed: bracket ({0}, {1}) is nonzero")]
    NotClosed(usize, usize),

    #[error("invalid rational literal `{0}`")]
    InvalidRational(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("frequency {0:?} does not fit the window")]
    WindowTooSmall(Vec<i64>),

    #[error("window overflow: {0}")]
    WindowOverflow(String),

    #[error("resonance at xi = {xi}: the small divisor vanishes")]
    Resonance { xi: i64 },

    #[error("divisor {divisor:e} at xi = {xi} is below the floor {floor:e}")]
    DivisorTooSmall { xi: i64, divisor: f64, floor: f64 },

    #[error("witness entry {entry} fails exact validation")]
    WitnessInvalid { entry: usize },

    #[error("only {certified} witness entries could be certified (need at least 3)")]
    DepthTooSmall { certified: usize },

    #[error("need at least 3 populated dyadic bands, found {0}")]
    InsufficientBands(usize),

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("no cone |xi| <= c|tau| with rapid decay found down to c = 1/{0}")]
    NoConeFound(u64),

    #[error("symbol is out of class: {0}")]
    OutOfClass(String),

    #[error("assertion failed: {0}")]
    AssertionFailure(String),

    #[error("inconsistent verdict: {0}")]
    InconsistentVerdict(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

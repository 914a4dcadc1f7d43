use thiserror::Error;

/// Errors raised by the spectral, transport and fixed-point layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("alpha must lie in (0, 1/2], got {0}")]
    AlphaOutOfRange(f64),

    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("coefficients are not Hermitian (max defect {defect:e} at k = ({k1}, {k2}))")]
    NotHermitian { k1: i64, k2: i64, defect: f64 },

    #[error("singular multiplier applied to a field with nonzero mean {mean:e}")]
    NonzeroMean { mean: f64 },

    #[error("multiplier is not finite at k = ({k1}, {k2})")]
    InvalidSymbol { k1: f64, k2: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("block index {j} outside [-1, {j_max}]")]
    BlockOutOfRange { j: i32, j_max: i32 },

    #[error("RK4 step failed at t = {t}: non-finite stage")]
    StepFailure { t: f64 },

    #[error("instability after {halvings} halvings (last dt = {dt:e}, t = {t})")]
    Unstable { halvings: u32, dt: f64, t: f64 },

    #[error("horizon too large: contraction factor {kappa} after {iterations} iterations")]
    HorizonTooLarge { kappa: f64, iterations: usize },

    #[error("horizon search failed after {halvings} halvings: {reason}")]
    HorizonSearchFailed { halvings: u32, reason: String },

    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

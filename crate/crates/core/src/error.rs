use thiserror::Error;

/// Errors raised by the kernels in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions {rows}x{cols}: {reason}")]
    InvalidDimensions {
        rows: usize,
        cols: usize,
        reason: &'static str,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("matrix is rank deficient (smallest pivot {smallest:e} vs threshold {threshold:e})")]
    RankDeficient { smallest: f64, threshold: f64 },
    #[error("iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("operation is undefined for the zero matrix")]
    ZeroMatrix,
    #[error("pivot breakdown at step {step}: |pivot| = {pivot:e}")]
    PivotBreakdown { step: usize, pivot: f64 },
    #[error("degenerate random draw after {attempts} attempts")]
    Degenerate { attempts: usize },
    #[error("singular value profile must be positive and non-increasing")]
    ProfileNotSorted,
    #[error("construction failed after {attempts} attempts: {reason}")]
    ConstructionFailed { attempts: usize, reason: String },
    #[error("FFT length {0} is not a power of two")]
    LengthNotPowerOfTwo(usize),
    #[error("requested rank {requested} exceeds the bound {bound} at mode {mode}")]
    RankTooLarge {
        mode: usize,
        requested: usize,
        bound: usize,
    },
    #[error("randomized sketch rank deficient after {attempts} draws")]
    RankDeficientSketch { attempts: usize },
    #[error("tensor with {entries} entries exceeds the cap of {cap}")]
    TooLarge { entries: usize, cap: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("trial {trial} failed: {source}")]
    Trial { trial: usize, source: Box<Error> },
}

impl Error {
    /// Tags an error with the Monte Carlo trial that raised it.
    pub fn in_trial(self, trial: usize) -> Error {
        Error::Trial {
            trial,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

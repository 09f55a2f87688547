use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("duplicate axis name `{0}`")]
    DuplicateAxis(String),
    #[error("axis `{0}` is already present in the distribution")]
    AxisCollision(String),
    #[error("axis sets overlap on `{0}`")]
    OverlappingAxes(String),
    #[error("distribution has {cells} cells, exceeding the cap of {cap}")]
    TooManyCells { cells: usize, cap: usize },
    #[error("probabilities sum to {sum:.12}, expected 1 within {tol:e}")]
    BadNormalization { sum: f64, tol: f64 },
    #[error("negative probability {value} at flat index {index}")]
    NegativeProbability { value: f64, index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: u128, cap: u128 },
    #[error("rate bookkeeping inapplicable: {0}")]
    RatesInapplicable(String),
    #[error("codebook of {cells} letters exceeds the cap of {cap}")]
    CodebookTooLarge { cells: u128, cap: u128 },
    #[error("exact enumeration of {states} states exceeds the cap of {cap}")]
    EnumerationTooLarge { states: u128, cap: u128 },
    #[error("decodability condition violated: {0}")]
    UndecodableRates(String),
    #[error("empty request: {0}")]
    EmptyRequest(String),
}

pub type Result<T> = std::result::Result<T, Error>;

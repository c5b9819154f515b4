use thiserror::Error;

/// Errors raised across the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum McdError {
    /// A numeric input is outside the domain of the formula it feeds.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dataset too small for {construction} construction (n = {n})")]
    DatasetTooSmall {
        construction: &'static str,
        n: usize,
    },

    /// Duplicate source rows break the distinctness assumption that the
    /// i.d. constructions rely on.
    #[error("duplicate {what} rows at indices {first} and {second}; i.d. constructions require pairwise distinct rows")]
    DuplicateRows {
        what: &'static str,
        first: usize,
        second: usize,
    },

    #[error("degenerate contrast dataset: {0}")]
    DegenerateContrast(String),

    #[error("degenerate density: {0}")]
    DegenerateDensity(String),
}

pub type Result<T, E = McdError> = std::result::Result<T, E>;

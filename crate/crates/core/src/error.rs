use alloc::string::String;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Invalid input configuration (bounds, names, grid specification).
    #[error("configuration error: {0}")]
    Config(String),
    /// A point lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),
    /// Inputs violate a documented precondition (shape mismatch and similar).
    #[error("contract violation: {0}")]
    Contract(String),
    /// An iterative solve failed to converge.
    #[error("solver failed: {0}")]
    Solver(String),
    /// Least-squares regression with fewer samples than basis terms.
    #[error("underdetermined regression: {samples} samples for {terms} basis terms")]
    Underdetermined { samples: usize, terms: usize },
    /// Every output component has (numerically) zero variance.
    #[error("zero total variance")]
    ZeroTotalVariance,
    /// Any other numerical breakdown.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    /// A numeric argument fell outside its allowed range.
    #[error("out of range: {0}")]
    Range(String),
    /// An input violated a domain constraint (normalization, caps, angle ranges).
    #[error("invalid input: {0}")]
    Domain(String),
    /// The configuration is valid but the requested operation is not defined for it.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// A thermal ensemble would drop more weight than allowed.
    #[error("truncation tail {tail:.3e} exceeds tolerance {tolerance:.1e}; try n_cut >= {suggested_cut}")]
    Truncation {
        tail: f64,
        tolerance: f64,
        suggested_cut: usize,
    },
    /// Objects built for different configurations or sectors were combined.
    #[error("configuration mismatch: {0}")]
    Config(String),
    /// An operator failed a structural precondition such as hermiticity.
    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, ChainError>;

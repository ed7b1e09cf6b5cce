use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: wrong shape, asymmetric where symmetry is required,
    /// non-finite entries.
    #[error("input error: {0}")]
    Input(String),

    /// Input is well formed but outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A frame or form system whose dimensions do not line up.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    /// An internal cross-check failed (e.g. wedge vs determinant).
    #[error("internal consistency failure: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

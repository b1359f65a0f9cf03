use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("covariance is not positive semidefinite at length {n} (minimum eigenvalue {min_eigenvalue:.3e})")]
    NonPsdCovariance { n: usize, min_eigenvalue: f64 },

    #[error("norming domain error: {0}")]
    Domain(String),

    #[error("unsupported marginal for this recipe: {0}")]
    UnsupportedMarginal(String),

    #[error("unknown marginal `{0}`")]
    UnknownMarginal(String),

    #[error("adaptive quadrature did not reach tolerance {tolerance:e} within {max_intervals} intervals")]
    QuadratureFailure { tolerance: f64, max_intervals: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("enumeration needs {terms} terms, limit is {limit}")]
    SupportTooLarge { terms: u128, limit: u128 },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Numeric failures as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonPsdCovariance { .. } | Error::QuadratureFailure { .. }
        )
    }
}

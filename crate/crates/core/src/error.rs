use thiserror::Error;

/// Errors raised by model construction, bound computation and the oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("numeric error: {what} (residual {residual:e})")]
    Numeric { what: String, residual: f64 },

    #[error("truncation error: tail mass {tail:e} exceeds tolerance {tolerance:e}; increase n_max")]
    Truncation { tail: f64, tolerance: f64 },

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("reversibility violated: max |m(x)P(x,y) - m(y)P(y,x)| = {0:e}")]
    NotReversible(f64),

    #[error("threshold {threshold} not reached within {ell_max} steps (extrapolated crossing near {extrapolated:?})")]
    NotReached {
        threshold: f64,
        ell_max: usize,
        extrapolated: Option<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid_model(msg: impl Into<String>) -> Self {
        Error::InvalidModel(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

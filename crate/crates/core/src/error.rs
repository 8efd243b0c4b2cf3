use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {arg} is within {distance:e} of a pole")]
    PoleProximity { arg: Complex64, distance: f64 },

    #[error("series did not converge within |k| <= {cap} at z = {z}")]
    NonConvergent { z: Complex64, cap: usize },

    #[error("modulus tau = {tau} rejected: Im(tau) must be >= {min_im}")]
    BadModulus { tau: Complex64, min_im: f64 },

    #[error("degenerate random draw: {0}")]
    DegenerateDraw(String),

    #[error("constraint tr(S^ii) = nu violated: site {site}, deviation {deviation:e}")]
    ConstraintViolation { site: usize, deviation: f64 },

    #[error("N^M = {size} exceeds the limit {limit}")]
    ScaleExceeded { size: usize, limit: usize },

    #[error("constraint drift {drift:e} at step {step}")]
    ConstraintDrift { step: usize, drift: f64 },

    #[error("pole guard tripped at step {step}: {source}")]
    PoleDuringIntegration {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

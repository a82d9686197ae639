use thiserror::Error;

/// Errors produced by model construction, estimation and the numeric routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),

    #[error("detection rate p{which} must lie in [0,1], got {value}")]
    InvalidDetectionRate { which: u8, value: f64 },

    #[error("sample must contain at least 2 items, got {0}")]
    SampleTooSmall(usize),

    #[error("estimator is undefined: {0}")]
    UndefinedEstimator(String),

    #[error("empirical covariance is nonpositive ({0}); the data cannot be explained by an interior model")]
    NonPositiveCovariance(f64),

    #[error("estimate carries validity flags; refusing to compute confidence intervals")]
    FlaggedEstimate,

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "the scalar likelihood equation has no root in ({bracket_lo}, {bracket_hi}); \
         the likelihood maximum lies on the boundary of the parameter domain \
         (detection rate at 1 is the typical explanation)"
    )]
    NoInteriorMaximum { bracket_lo: f64, bracket_hi: f64 },

    #[error("truncated grid captured only {captured_mass} of the probability mass (need >= {required})")]
    TruncationFailure { captured_mass: f64, required: f64 },

    #[error("matrix is singular or not positive definite")]
    SingularMatrix,
}

impl Error {
    /// Short machine-readable tag, used for failure bookkeeping in studies.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidLambda(_) => "invalid_lambda",
            Error::InvalidDetectionRate { .. } => "invalid_detection_rate",
            Error::SampleTooSmall(_) => "sample_too_small",
            Error::UndefinedEstimator(_) => "undefined_estimator",
            Error::NonPositiveCovariance(_) => "covariance_nonpositive",
            Error::FlaggedEstimate => "flagged_estimate",
            Error::Domain(_) => "domain_error",
            Error::NoInteriorMaximum { .. } => "no_interior_maximum",
            Error::TruncationFailure { .. } => "truncation_failure",
            Error::SingularMatrix => "singular_matrix",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

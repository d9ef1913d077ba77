use thiserror::Error;

/// Errors raised by constructors, solvers and the command front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not positive definite: eigenvalue {eigenvalue:.6e}")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("body is not of class C2+: curvature radius {radius:.6e} at theta = {theta:.6}")]
    NonPositiveCurvature { theta: f64, radius: f64 },

    #[error("support function is not positive: h = {value:.6e} at theta = {theta:.6}")]
    OriginNotInterior { theta: f64, value: f64 },

    #[error("symmetric body has odd harmonic k = {k}")]
    OddHarmonic { k: u32 },

    #[error("resolution mismatch: {0}")]
    Resolution(String),

    #[error("resolution out of bounds: {0}")]
    ResolutionOutOfBounds(String),

    #[error("no informative perturbation among {samples} samples")]
    NoInformativePerturbation { samples: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

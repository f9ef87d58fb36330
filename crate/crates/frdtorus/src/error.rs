use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrdError {
    #[error("invalid torus spec: {0}")]
    InvalidSpec(String),

    #[error("invalid spectral parameters: {0}")]
    InvalidParams(String),

    #[error("spectral argument s must be positive, got {0}")]
    NonPositiveS(f64),

    #[error("integrand not integrable against the spectral density: {0}")]
    NotIntegrable(String),

    #[error("integrand violates its declared envelope near s = {s:.6e}: |f| = {observed:.6e} exceeds {allowed:.6e}")]
    EnvelopeViolation { s: f64, observed: f64, allowed: f64 },

    #[error("quadrature did not converge within {panels} panels (relative change {rel_change:.3e}, target {target:.3e})")]
    QuadratureNonConvergence {
        panels: usize,
        rel_change: f64,
        target: f64,
    },

    #[error("window kernel is truncated but carries no decay certificate")]
    MissingDecayCertificate,

    #[error("decay certificate too weak to certify tail tolerance {0:.3e}")]
    CertificateTooWeak(f64),

    #[error("invalid block schedule: {0}")]
    InvalidSchedule(String),

    #[error("scaling collapse needs at least 3 scales, got {0}")]
    TooFewScales(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("malformed decomposition directory: {0}")]
    MalformedDir(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FrdError>;

use thiserror::Error;

/// Every failure the toolkit can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("transmittance {0} out of range")]
    BadTransmittance(f64),
    #[error("truncation leakage {leakage:e} exceeds tolerance (dim {dim})")]
    TruncationOverflow { leakage: f64, dim: usize },
    #[error("all drawn moduli vanish{}", realization.map(|r| format!(" (realization {r})")).unwrap_or_default())]
    DegenerateDraw { realization: Option<usize> },
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("observable undefined on the vacuum (mean photon number {0:e})")]
    VacuumUndefined(f64),
    #[error("leading coefficient {0:e} is too small for a degree-N polynomial")]
    LeadingCoefficientZero(f64),
    #[error("root finder did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("post-selection probability {0:e} at step {1} is zero")]
    ZeroProbability(f64, usize),
    #[error("recipe verification failed: fidelity {0}")]
    VerificationFailed(f64),
    #[error("detector efficiency {0} outside (0, 1]")]
    BadEta(f64),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroNorm => "ZeroNorm",
            Error::DimMismatch(..) => "DimMismatch",
            Error::BadTransmittance(_) => "BadTransmittance",
            Error::TruncationOverflow { .. } => "TruncationOverflow",
            Error::DegenerateDraw { .. } => "DegenerateDraw",
            Error::NotNormalized(_) => "NotNormalized",
            Error::VacuumUndefined(_) => "VacuumUndefined",
            Error::LeadingCoefficientZero(_) => "LeadingCoefficientZero",
            Error::NoConvergence(_) => "NoConvergence",
            Error::ZeroProbability(..) => "ZeroProbability",
            Error::VerificationFailed(_) => "VerificationFailed",
            Error::BadEta(_) => "BadEta",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

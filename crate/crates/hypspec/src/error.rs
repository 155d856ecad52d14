use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("word reduces to the identity")]
    TrivialElement,
    #[error("element is not hyperbolic (|trace| = {0} <= 2)")]
    NonHyperbolicElement(f64),
    #[error("enumeration cannot certify coverage up to L = {lmax}: {reason}")]
    IncompleteEnumeration { lmax: f64, reason: String },
    #[error("spectrum complete only to {have}, need {need}")]
    SpectrumTooShort { have: f64, need: f64 },
    #[error("quadrature step {step} exceeds the resolution limit {limit}")]
    UnderResolved { step: f64, limit: f64 },
    #[error("no lambda found up to {0}")]
    NotFound(f64),
    #[error("variance {sigma2} below the hypothesis margin {margin}")]
    VarianceTooSmall { sigma2: f64, margin: f64 },
    #[error("no closed geodesic in the orbit window")]
    EmptyEnsemble,
    #[error("preset is not co-compact: {0}")]
    NonCompactPreset(String),
    #[error("spectrum file: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("not semisimple: {0}")]
    NotSemisimple(String),
    #[error("invalid Cartan split: {0}")]
    InvalidCartanSplit(String),
    #[error("invalid isotropy: {0}")]
    InvalidIsotropy(String),
    #[error("module not irreducible: {0}")]
    NotIrreducible(String),
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("fiber K/H is zero-dimensional")]
    EmptyFiber,
    #[error("integrator failure at t = {t}: {reason}")]
    IntegratorFailure {
        t: f64,
        reason: String,
        last_state: Vec<f64>,
    },
    #[error("diagonal ansatz broken at t = {t} (off-diagonal ratio {ratio:e})")]
    DiagonalityBroken { t: f64, ratio: f64 },
    #[error("trajectory did not go extinct")]
    NotExtinct,
    #[error("wrong regime: {0}")]
    WrongRegime(String),
    #[error("monitor violation: {0}")]
    MonitorViolation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the failure class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) | Error::Io(_) | Error::Json(_) => "InputError",
            Error::NotSemisimple(_) => "NotSemisimple",
            Error::InvalidCartanSplit(_) => "InvalidCartanSplit",
            Error::InvalidIsotropy(_) => "InvalidIsotropy",
            Error::NotIrreducible(_) => "NotIrreducible",
            Error::DegenerateMetric(_) => "DegenerateMetric",
            Error::EmptyFiber => "EmptyFiber",
            Error::IntegratorFailure { .. } => "IntegratorFailure",
            Error::DiagonalityBroken { .. } => "DiagonalityBroken",
            Error::NotExtinct => "NotExtinct",
            Error::WrongRegime(_) => "WrongRegime",
            Error::MonitorViolation(_) => "MonitorViolation",
        }
    }
}

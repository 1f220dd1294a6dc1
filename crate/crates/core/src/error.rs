use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("singular attitude: |phi| = {phi} rad is within {guard} rad of pi/2")]
    SingularAttitude { phi: f64, guard: f64 },

    #[error(
        "flow angles (alpha = {alpha} rad, beta = {beta} rad) outside the coefficient table domain"
    )]
    CoefficientOutOfRange { alpha: f64, beta: f64 },

    #[error("effective {which} matrix is not positive definite")]
    NonPositiveDefiniteMass { which: &'static str },

    #[error("actuator command out of range: {0}")]
    CommandOutOfRange(String),

    #[error("force trace too short: spans {available} s, need {required} s")]
    InsufficientTrace { available: f64, required: f64 },

    #[error("unknown behavior preset `{0}`")]
    UnknownPreset(String),

    #[error("pilot input out of range: {0}")]
    InputOutOfRange(String),

    #[error("illegal mode transition: {0}")]
    IllegalTransition(String),

    #[error("mode/command mismatch: {0}")]
    ModeCommandMismatch(String),

    #[error("numerical divergence at step {step} (t = {t} s): {reason}")]
    NumericalDivergence { t: f64, step: u64, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl SimError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        SimError::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}

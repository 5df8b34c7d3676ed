use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("no coincidences among {n_trials} trials; correlation undefined")]
    NoCoincidences { n_trials: u64 },

    #[error("sample of size {got} is too small (need at least {need})")]
    SampleTooSmall { got: usize, need: usize },

    #[error("integration blew up at step {step} (t = {t})")]
    BlowUp { step: usize, t: f64 },

    #[error(transparent)]
    Config(#[from] ConfigError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

use thiserror::Error;

/// Errors raised by the model, simulation and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HerdError {
    #[error("{name} = {value} is outside its admissible domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("y = x/(1-x) diverges at x = 1")]
    Infinite,
    #[error("mood is undefined when there are no chartists")]
    UndefinedMood,
    #[error("all transition rates vanish (absorbing state)")]
    Absorbing,
    #[error("non-finite drift or diffusion at t = {t}")]
    NumericFailure { t: f64 },
    #[error("{path}: {msg}")]
    Config { path: String, msg: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate histogram: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, HerdError>;

impl HerdError {
    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        HerdError::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

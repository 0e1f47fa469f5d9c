use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} out of range for a chain of {len} sites")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("state has {got} entries, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("{0}")]
    Domain(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite value in state at t = {t}")]
    NonFinite { t: f64 },

    #[error("momentum samples are not Hermitian-symmetric (max asymmetry {0:e})")]
    NonHermitianSamples(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

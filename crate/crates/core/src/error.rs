use thiserror::Error;

/// Errors raised by the analytic models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its domain. `name` is the parameter name as it
    /// appears in configuration files.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    /// An approximation does not hold at the requested operating point.
    /// `flag` names the violated condition.
    #[error("approximation breakdown ({flag}): {detail}")]
    Breakdown { flag: &'static str, detail: &'static str },

    /// The two hypotheses are not separable (for example `lambda0 == lambda1`).
    #[error("hypotheses are not separable: {0}")]
    NotSeparable(&'static str),

    /// A divergence is infinite (a probability is exactly 0 or 1).
    #[error("infinite divergence: {0}")]
    InfiniteDivergence(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}

use thiserror::Error;

/// Errors raised by the interferometer model and the measurement protocols.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DualityError {
    /// No light reaches the detectors, so P or V is undefined.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("visibility arguments out of order: wmax = {wmax} < wmin = {wmin}")]
    ArgumentOrder { wmax: f64, wmin: f64 },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
}

impl DualityError {
    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        DualityError::Degenerate(msg.into())
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, DualityError::Degenerate(_))
    }
}

pub type Result<T, E = DualityError> = std::result::Result<T, E>;

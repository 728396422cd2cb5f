use thiserror::Error;

/// Errors raised by the wear model and its numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WearError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{field}` = {value}: {constraint}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        constraint: String,
    },

    #[error("mode index {index} out of range 1..={n_modes}")]
    ModeIndex { index: usize, n_modes: usize },

    #[error("input error: {0}")]
    Input(String),

    #[error("unsupported limit: {0}")]
    UnsupportedLimit(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("consistency failure: {0}")]
    Consistency(String),
}

impl WearError {
    /// True for errors caused by bad user input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            WearError::Domain(_)
                | WearError::InvalidParameter { .. }
                | WearError::ModeIndex { .. }
                | WearError::Input(_)
                | WearError::UnsupportedLimit(_)
        )
    }

    pub(crate) fn invalid(field: &'static str, value: f64, constraint: impl Into<String>) -> Self {
        WearError::InvalidParameter {
            field,
            value,
            constraint: constraint.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, WearError>;

use thiserror::Error;

/// Errors raised by construction, analysis and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("level iteration did not reach {target} within {iterations} iterations (p = {p})")]
    Construction { p: f64, target: usize, iterations: usize },

    #[error("optimum unreachable from level {level}: linear system is singular")]
    SingularSystem { level: usize },

    #[error("runtime curve has no finite value; cannot locate a minimum")]
    NoMinimum,

    #[error("all {runs} runs exceeded the step cap of {cap}; estimate unavailable")]
    EstimateUnavailable { runs: u64, cap: u64 },
}

impl LabError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        LabError::InvalidParameter { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

/// Checks that a real rate lies in the open unit interval.
pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(LabError::param(name, format!("{value} is not in the open interval (0, 1)")))
    }
}

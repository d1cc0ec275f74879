use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated its documented constraint.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("size mismatch: expected {expected} entries, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    /// The steady-state system has no unique solution at this frequency.
    #[error("singular steady-state system at omega = {omega} J")]
    SingularSystem { omega: f64 },

    #[error("frequency {omega} J is not on the grid")]
    OffGrid { omega: f64 },

    #[error("port spectrum `{port}` has zero norm")]
    ZeroNorm { port: &'static str },

    #[error("{failed} of {total} realizations failed, exceeding the {limit_percent}% exclusion budget")]
    ExclusionBudget {
        failed: usize,
        total: usize,
        limit_percent: f64,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised by model evaluation, validation, and I/O helpers.
#[derive(Debug, Error)]
pub enum ViseError {
    /// A scalar routine received an argument outside its domain.
    #[error("{op}: argument out of domain ({detail})")]
    Domain { op: &'static str, detail: String },

    /// A parameter record failed validation.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    /// An intermediate quantity under- or overflowed.
    #[error("{op}: numerical overflow ({detail})")]
    Overflow { op: &'static str, detail: String },

    /// The voting rule makes the requested quantity meaningless, e.g. the
    /// group's vote never changes the outcome so no claims threshold matters.
    #[error("degenerate voting rule: {0}")]
    DegenerateRule(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ViseError {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        ViseError::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        ViseError::Validation {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ViseError>;

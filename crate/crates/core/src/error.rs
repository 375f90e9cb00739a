use thiserror::Error;

/// Errors raised by predictors, measures and the evaluation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("label {label} is outside the declared alphabet of size {alphabet}")]
    UnknownLabel { label: usize, alphabet: usize },

    #[error("label kind mismatch: expected {expected} label, found {found}")]
    LabelKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("need at least {needed} examples, have {found}")]
    TooFewExamples { needed: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular or ill-conditioned system (reciprocal condition {rcond:.3e})")]
    Singular { rcond: f64 },

    #[error("empty score vector")]
    EmptyScores,

    #[error("schedule violation: {0}")]
    Schedule(String),
}

impl Error {
    /// True for failures of the linear-algebra layer rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

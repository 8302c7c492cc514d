//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors raised by domain construction, mechanisms, solvers, and loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("noise scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("workload is not representable by the strategy (relative residual {residual:.3e})")]
    UnrepresentableWorkload { residual: f64 },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("input is empty")]
    EmptyInput,

    #[error("sum of data-utility weights must be positive")]
    ZeroDataWeight,

    #[error("bracket [{lo}, {hi}] does not straddle the target {target}: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    BracketDoesNotStraddle {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        target: f64,
    },

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("duplicate district id {0:?}")]
    DuplicateDistrict(String),

    #[error("sppe must be positive at line {line}")]
    NonPositiveSppe { line: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("range too large for exhaustive certification: {0}")]
    RangeTooLarge(String),

    #[error("population too large for exhaustive enumeration: {0}")]
    PopulationTooLarge(String),

    #[error("instance too large to enumerate: {0}")]
    InstanceTooLarge(String),

    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },
}

impl Error {
    /// Stable machine-readable variant name, used in CLI error envelopes.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DomainMismatch(_) => "DomainMismatch",
            Error::NonPositiveScale(_) => "NonPositiveScale",
            Error::NonPositiveEpsilon(_) => "NonPositiveEpsilon",
            Error::UnrepresentableWorkload { .. } => "UnrepresentableWorkload",
            Error::ParameterOutOfRange(_) => "ParameterOutOfRange",
            Error::EmptyInput => "EmptyInput",
            Error::ZeroDataWeight => "ZeroDataWeight",
            Error::BracketDoesNotStraddle { .. } => "BracketDoesNotStraddle",
            Error::ParseError { .. } => "ParseError",
            Error::DuplicateDistrict(_) => "DuplicateDistrict",
            Error::NonPositiveSppe { .. } => "NonPositiveSppe",
            Error::EmptyDataset => "EmptyDataset",
            Error::RangeTooLarge(_) => "RangeTooLarge",
            Error::PopulationTooLarge(_) => "PopulationTooLarge",
            Error::InstanceTooLarge(_) => "InstanceTooLarge",
            Error::Invalid { .. } => "Invalid",
        }
    }

    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

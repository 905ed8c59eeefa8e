use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of a function or type.
    #[error("domain error: {0}")]
    Domain(String),

    /// A rate (error rate, QBER) was requested where its denominator vanishes.
    #[error("undefined rate: {0}")]
    UndefinedRate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// An intensity received no rounds, so its statistics cannot be estimated.
    #[error("degenerate statistics: {0}")]
    DegenerateStatistics(String),

    /// No assignment of yields and error rates reproduces the observed statistics.
    #[error("statistics inconsistent with any yield/error assignment: {0}")]
    Inconsistent(String),

    #[error("LP solver failed: {0}")]
    Solver(String),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

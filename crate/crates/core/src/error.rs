use gwz_exact::ExactError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probabilities sum to {sum}, not 1")]
    ProbabilitySumNotOne { sum: String },

    #[error("a node may not have zero children (q = 0 in the law)")]
    ZeroChildrenForbidden,

    #[error("degenerate law: every node has exactly one child")]
    DegenerateLaw,

    #[error("child count {q} appears more than once")]
    DuplicateSupport { q: u32 },

    #[error("probability for q = {q} must lie in (0, 1], got {p}")]
    InvalidProbability { q: u32, p: String },

    #[error("invalid law file: {0}")]
    LawFormat(String),

    #[error("1 - E[Q^(1-N-beta*binom(N,2))] vanishes identically at N = {n}")]
    DegenerateDenominator { n: usize },

    #[error("negative beta {beta} is not supported by the simulator")]
    NegativeBetaUnsupported { beta: f64 },

    #[error("no exact fixed point after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("exact evaluation requested for a non-logarithmic cost sequence")]
    UnsupportedExactCost,

    #[error("invalid leaf path: {0}")]
    InvalidPath(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Exact(#[from] ExactError),
}

impl Error {
    /// Variant name, for diagnostics that scripts can match on.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ProbabilitySumNotOne { .. } => "ProbabilitySumNotOne",
            Error::ZeroChildrenForbidden => "ZeroChildrenForbidden",
            Error::DegenerateLaw => "DegenerateLaw",
            Error::DuplicateSupport { .. } => "DuplicateSupport",
            Error::InvalidProbability { .. } => "InvalidProbability",
            Error::LawFormat(_) => "LawFormat",
            Error::DegenerateDenominator { .. } => "DegenerateDenominator",
            Error::NegativeBetaUnsupported { .. } => "NegativeBetaUnsupported",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::UnsupportedExactCost => "UnsupportedExactCost",
            Error::InvalidPath(_) => "InvalidPath",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Exact(_) => "Exact",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

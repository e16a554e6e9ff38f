use thiserror::Error;

/// Errors raised by tensor construction, bound evaluation and the LHV oracle.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BellError {
    #[error("n_parties must be ≥ 2 (got {0})")]
    TooFewParties(usize),

    #[error("n_parties {got} outside supported range [{min}, {max}]")]
    PartiesOutOfRange { got: usize, min: usize, max: usize },

    #[error("visibility must lie in [0, 1] (got {0})")]
    InvalidVisibility(f64),

    #[error("expected {expected} components for {n_parties} parties, found {found}")]
    ComponentCount {
        n_parties: usize,
        expected: usize,
        found: usize,
    },

    #[error("component {index} is not finite")]
    NonFiniteComponent { index: usize },

    #[error("size mismatch: {what} has {found} entries, tensor has {expected} parties")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("grid needs n_settings ≥ 2 (got {0})")]
    InvalidSettingCount(usize),

    #[error("operation requires a three-setting grid (got {0} settings)")]
    NotThreeSetting(usize),

    #[error("grid of {n_settings}^{n_parties} points exceeds the direct summation limit")]
    GridTooLarge { n_settings: usize, n_parties: usize },

    #[error("grid refinement limited to {max} parties (got {got})")]
    GridRefineTooLarge { got: usize, max: usize },

    #[error("exhaustive LHV enumeration limited to {max} parties (got {got}); use alternating mode")]
    ExhaustiveTooLarge { got: usize, max: usize },

    #[error("tensor is not a GHZ–Werner tensor")]
    NotGhzWerner,

    #[error("strategy entries must be ±1")]
    InvalidSign,

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("unknown Pauli axis `{0}` (expected x or y)")]
    InvalidAxis(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),
}

pub type Result<T> = std::result::Result<T, BellError>;

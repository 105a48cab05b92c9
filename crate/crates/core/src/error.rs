//! Error type shared across the crate.

use thiserror::Error;

/// Failures raised by validation, closed forms and oracles.
#[derive(Debug, Error)]
pub enum TwoWellError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is below the minimum of 2")]
    DimensionTooSmall(usize),

    #[error("{op} closed forms require d = 2, got d = {d}")]
    UnsupportedDimension { op: &'static str, d: usize },

    #[error("direction has norm {0:e}, below 1e-12")]
    DegenerateDirection(f64),

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("wells coincide: |a1 - a0| = {0:e}")]
    DegenerateWells(f64),

    #[error("direction is not an optimal lamination direction: p = {0:e}")]
    NotOptimal(f64),

    #[error("state is equicompatible; {0}")]
    Equicompatible(&'static str),

    #[error("cell aspect violated: l = {l}, h = {h} ({rule})")]
    Aspect { l: f64, h: f64, rule: &'static str },

    #[error("volume fraction {0} outside the open interval (0, 1)")]
    ThetaOutOfRange(f64),

    #[error("regime {0} has no branching construction")]
    PureRegime(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("internal error: {0}")]
    Internal(String),
}

/// Crate result alias.
pub type Result<T> = std::result::Result<T, TwoWellError>;

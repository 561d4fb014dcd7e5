//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors surfaced by the analysis routines.
///
/// Variants map onto the distinct failure classes callers dispatch on: bad
/// arguments, empty inputs, malformed point data, geometric coverage gaps,
/// model saturation, and the stratification divergence guard.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated its documented precondition.
    InvalidArgument(String),
    /// An operation that needs at least one element received none.
    EmptyInput(&'static str),
    /// Input data broke a structural invariant (e.g. inconsistent pulses).
    MalformedInput(String),
    /// A query point fell outside the DEM raster.
    OutOfCoverage { x: f64, y: f64 },
    /// The occlusion model predicts the layer is unreachable at any density.
    SaturatedOcclusion { layer: u32 },
    /// Iterative stratification failed to make progress.
    AlgorithmDivergence { iterations: u32 },
    /// Stem placement could not satisfy the spacing constraint.
    PlacementFailure { placed: usize, requested: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::MalformedInput(msg) => write!(f, "malformed input: {msg}"),
            Error::OutOfCoverage { x, y } => {
                write!(f, "point ({x}, {y}) lies outside the DEM coverage")
            }
            Error::SaturatedOcclusion { layer } => write!(
                f,
                "occluded fraction reaches 1 before layer {layer}; no finite density suffices"
            ),
            Error::AlgorithmDivergence { iterations } => write!(
                f,
                "stratification made no progress after {iterations} iterations"
            ),
            Error::PlacementFailure { placed, requested } => write!(
                f,
                "placed only {placed} of {requested} stems under the spacing constraint"
            ),
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

//! Error type shared by the core operations.

use alloc::string::String;
use core::fmt;

/// Contract and domain failures raised by core operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// Two grids that must agree in shape do not.
    ShapeMismatch {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },
    /// A depth (or inverse depth) that must be strictly positive is not.
    NonPositiveDepth,
    /// A pixel location outside the grid.
    OutOfBounds { x: usize, y: usize },
    /// A reduction over an empty pixel mask.
    EmptyMask,
    /// A parameter outside its documented range.
    InvalidParameter(String),
    /// Backward invoked with a cache from a different weight state.
    StaleCache,
    /// A dataset or frame index that does not exist.
    BadIndex(usize),
    /// An operation that needs at least one input got none.
    EmptyInput,
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::ShapeMismatch { expected, got } => write!(
                f,
                "shape mismatch: expected {}x{}x{}, got {}x{}x{}",
                expected.0, expected.1, expected.2, got.0, got.1, got.2
            ),
            CoreError::NonPositiveDepth => write!(f, "depth values must be strictly positive"),
            CoreError::OutOfBounds { x, y } => write!(f, "location ({x}, {y}) is out of bounds"),
            CoreError::EmptyMask => write!(f, "operation requires a nonempty mask"),
            CoreError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            CoreError::StaleCache => write!(f, "forward cache does not match current weights"),
            CoreError::BadIndex(i) => write!(f, "index {i} out of range"),
            CoreError::EmptyInput => write!(f, "operation requires at least one input"),
        }
    }
}

pub type CoreResult<T> = Result<T, CoreError>;

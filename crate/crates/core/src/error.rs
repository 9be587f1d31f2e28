//! Crate-wide error type.

use std::fmt;

/// Errors produced by latentkit operations.
#[derive(Debug)]
pub enum Error {
    /// Matrix dimensions are structurally invalid (zero rows or columns).
    InvalidShape { rows: usize, cols: usize },
    /// Backing data length does not match the declared dimensions.
    DataLength { expected: usize, got: usize },
    /// Two operands have incompatible shapes.
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// A vector has the wrong length.
    LengthMismatch { expected: usize, got: usize },
    /// A square matrix was required.
    NotSquare { rows: usize, cols: usize },
    /// The matrix is not symmetric within tolerance.
    NotSymmetric { max_asymmetry: f64 },
    /// Non-finite value encountered.
    NonFinite { context: String },
    /// A row with (near-)zero norm cannot be normalized.
    ZeroRow { row: usize },
    /// Not enough samples for the requested operation.
    TooFewSamples { required: usize, got: usize },
    /// Requested more components than the numerical rank supports.
    RankDeficient { requested: usize, rank: usize },
    /// Requested component count exceeds a structural limit.
    TooManyComponents { requested: usize, limit: usize },
    /// An iterative solver did not converge.
    NonConvergence { iterations: usize, delta: f64 },
    /// A direction collapsed to (near-)zero norm.
    DegenerateDirection { index: usize },
    /// A direction was expected to have unit norm.
    NotUnitNorm { norm: f64 },
    /// A matrix row or column is entirely zero where that is not allowed.
    ZeroRowOrColumn { index: usize, axis: &'static str },
    /// Training data contains only one class.
    SingleClass { label: String },
    /// Evaluation requires a nonempty test set.
    EmptyTestSet,
    /// A class in the manifest has no items.
    EmptyClass { label: String },
    /// A parameter is outside its valid range.
    InvalidParam { name: &'static str, message: String },
    /// The optimizer aborted on a non-finite gradient.
    GradientFailure { step: usize },
    /// A pixel value is outside [-1, 1].
    PixelOutOfRange { index: usize, value: f64 },
    /// Underlying I/O failure.
    Io(std::io::Error),
    /// A file has an unsupported or malformed format.
    Format { message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidShape { rows, cols } => {
                write!(
                    f,
                    "invalid matrix shape {rows}x{cols}: dimensions must be at least 1"
                )
            }
            Error::DataLength { expected, got } => {
                write!(
                    f,
                    "data length {got} does not match shape (expected {expected})"
                )
            }
            Error::ShapeMismatch { expected, got } => write!(
                f,
                "shape mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            Error::NotSquare { rows, cols } => {
                write!(f, "matrix must be square, got {rows}x{cols}")
            }
            Error::NotSymmetric { max_asymmetry } => {
                write!(
                    f,
                    "matrix is not symmetric (max asymmetry {max_asymmetry:e})"
                )
            }
            Error::NonFinite { context } => write!(f, "non-finite value in {context}"),
            Error::ZeroRow { row } => write!(f, "row {row} has (near-)zero norm"),
            Error::TooFewSamples { required, got } => {
                write!(f, "needs at least {required} samples, got {got}")
            }
            Error::RankDeficient { requested, rank } => write!(
                f,
                "requested {requested} components but numerical rank is only {rank}"
            ),
            Error::TooManyComponents { requested, limit } => {
                write!(f, "requested {requested} components, limit is {limit}")
            }
            Error::NonConvergence { iterations, delta } => write!(
                f,
                "did not converge after {iterations} iterations (last delta {delta:e})"
            ),
            Error::DegenerateDirection { index } => {
                write!(f, "direction {index} is degenerate (near-zero norm)")
            }
            Error::NotUnitNorm { norm } => {
                write!(f, "direction must have unit norm, got {norm}")
            }
            Error::ZeroRowOrColumn { index, axis } => {
                write!(f, "{axis} {index} is entirely zero")
            }
            Error::SingleClass { label } => {
                write!(f, "training data contains only the {label:?} class")
            }
            Error::EmptyTestSet => write!(f, "test set is empty"),
            Error::EmptyClass { label } => write!(f, "class {label:?} has no items"),
            Error::InvalidParam { name, message } => write!(f, "invalid {name}: {message}"),
            Error::GradientFailure { step } => {
                write!(f, "non-finite gradient at optimization step {step}")
            }
            Error::PixelOutOfRange { index, value } => {
                write!(f, "pixel {index} value {value} is outside [-1, 1]")
            }
            Error::Io(err) => write!(f, "i/o error: {err}"),
            Error::Format { message } => write!(f, "format error: {message}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Format {
            message: err.to_string(),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

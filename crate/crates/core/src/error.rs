use std::fmt;

/// Errors raised by the simulator's domain operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or matrix does not match the scenario dimensions.
    DimensionMismatch { expected: usize, got: usize },
    /// Channel dimensions must be at least 1x1.
    EmptyDimensions,
    /// A scalar argument is outside its valid range.
    OutOfRange { what: &'static str, value: f64 },
    /// Requested uplink bandwidth meets or exceeds the total budget,
    /// leaving nothing for the downlink.
    InfeasibleProfile { uplink: f64, budget: f64 },
    /// The Gram matrix of the quantized channel is numerically singular
    /// and cannot be inverted without regularization.
    SingularChannel { condition: f64 },
    /// The contention-throughput series hit the term cap before the
    /// relative cutoff was reached.
    SeriesDiverged { terms: usize, relative: f64 },
    /// A configuration field combination is invalid.
    InvalidConfig(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::EmptyDimensions => write!(f, "channel dimensions must be at least 1x1"),
            Error::OutOfRange { what, value } => {
                write!(f, "{what} out of range: {value}")
            }
            Error::InfeasibleProfile { uplink, budget } => write!(
                f,
                "infeasible rate profile: uplink bandwidth {uplink} exhausts the budget {budget}"
            ),
            Error::SingularChannel { condition } => write!(
                f,
                "quantized channel Gram matrix is numerically singular (condition {condition:.3e})"
            ),
            Error::SeriesDiverged { terms, relative } => write!(
                f,
                "throughput series did not converge after {terms} terms (relative term {relative:.3e})"
            ),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

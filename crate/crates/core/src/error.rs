use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid cardinality {0}: must be a power of two")]
    InvalidCardinality(usize),
    #[error("cardinality {0} has no integer square root")]
    NotSquare(usize),
    #[error("degenerate constellation: all points are zero")]
    DegenerateConstellation,
    #[error("constellation point {0} is not finite")]
    NonFinitePoint(usize),
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("sequence of {len} symbols is too short for half window {half_window}")]
    SequenceTooShort { len: usize, half_window: usize },
    #[error("empty reference constellation")]
    EmptyReference,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("NLIN coefficients give a negative variance ({0:e} W)")]
    InvalidCoefficients(f64),
    #[error("symbol index {index} out of range for M = {m}")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },
}

use thiserror::Error;

/// Errors raised by tensor construction and the numeric primitives.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error("shape {shape:?} implies {expected} elements, got {actual}")]
    ShapeDataMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("shape {shape:?} contains a zero dimension")]
    ZeroDimension { shape: Vec<usize> },
    #[error("dimension mismatch in {op}: lhs {lhs:?}, rhs {rhs:?}")]
    DimensionMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op} expects a rank-{expected} tensor, got shape {shape:?}")]
    RankMismatch {
        op: &'static str,
        expected: usize,
        shape: Vec<usize>,
    },
    #[error("{op} is undefined for an empty tensor")]
    EmptyInput { op: &'static str },
}

pub type Result<T> = std::result::Result<T, TensorError>;

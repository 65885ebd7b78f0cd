use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by ingestion, estimation and the experiment pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    #[error("no records")]
    NoRecords,

    #[error("duplicated datetime stamp {0}")]
    DuplicateStamp(String),

    #[error("series has gaps; missing stamps: {}", .missing.join(", "))]
    Gap { missing: Vec<String> },

    #[error("domain error at index {index}: {message}")]
    Domain { index: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty neighbourhood: no training curve within bandwidth {bandwidth} (smallest distance {min_distance})")]
    EmptyNeighbourhood { bandwidth: f64, min_distance: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),
}

/// Coarse classification used to map errors onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Precondition,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::Data { .. }
            | Error::NoRecords
            | Error::DuplicateStamp(_)
            | Error::Gap { .. }
            | Error::Domain { .. } => ErrorClass::Data,
            Error::InvalidArgument(_)
            | Error::InsufficientData(_)
            | Error::LengthMismatch { .. } => ErrorClass::Precondition,
            Error::Degenerate(_) | Error::EmptyNeighbourhood { .. } | Error::NoConvergence(_) => {
                ErrorClass::Numerical
            }
        }
    }
}

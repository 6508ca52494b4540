use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid structure parameters: {0}")]
    InvalidParams(String),

    #[error("{what} = {value} is out of range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("split structure mismatch: expected {expected} coordinates, found {found}")]
    SplitMismatch { expected: usize, found: usize },

    #[error("empty input set: {0}")]
    EmptySet(&'static str),

    #[error("region does not intersect the grid")]
    EmptyRegion,

    #[error("containment violated: {0}")]
    NotContained(String),

    #[error("value must be positive: {0}")]
    NonPositive(String),

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),

    #[error("malformed header")]
    MalformedHeader,

    #[error("truncated payload")]
    TruncatedPayload,

    #[error("checksum mismatch")]
    ChecksumMismatch,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver did not converge: residual {residual:e} after {sweeps} sweeps")]
    NotConverged { residual: f64, sweeps: usize },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

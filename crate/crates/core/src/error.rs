use std::io;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("schedule at n = {n} is degenerate: tau + K = {band} >= p = {p}")]
    DegenerateSchedule { n: usize, p: usize, band: usize },

    #[error("column {column} is constant (zero centered norm); its correlation is undefined")]
    DegenerateColumn { column: usize },

    #[error("covariance matrix is not positive semi-definite (leading minor {minor} fails)")]
    NotPositiveDefinite { minor: usize },

    #[error("requested block rows {rows:?} x cols {cols:?} is outside a {nrows} x {ncols} matrix")]
    OutOfRange {
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
        nrows: usize,
        ncols: usize,
    },

    #[error("radicand of a_n(y) is negative at y = {y}")]
    NegativeRadicand { y: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("malformed matrix file: {0}")]
    Format(String),

    #[error("replication {index} (seed {seed:#018x}) failed: {source}")]
    Replication {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("edge #{index} ({src}, {dst}) has an endpoint outside 0..{num_nodes}")]
    EdgeOutOfRange {
        index: usize,
        src: usize,
        dst: usize,
        num_nodes: usize,
    },

    #[error("{what}: index {index} out of range for length {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("row {row} sums to zero and cannot be normalized")]
    ZeroRowSum { row: usize },

    #[error("empty mask: nothing to evaluate")]
    EmptyMask,

    #[error("matrix is numerically singular (|p0| = {p0:e})")]
    NearSingular { p0: f64 },

    #[error("matrix of size {size} exceeds the limit of {limit}")]
    Oversize { size: usize, limit: usize },

    #[error("multiple eigenvalues: minimum eigengap {gap:e} is below {tol:e}")]
    MultipleEigenvalues { gap: f64, tol: f64 },

    #[error("missing frequency: eigenvector {index} is orthogonal to the features")]
    MissingFrequency { index: usize },

    #[error("all labels are degenerate (single-class) under the mask")]
    AllLabelsDegenerate,

    #[error("graph has {num_nodes} nodes, above the full-batch cap of {cap}; use method ld or raise --joint-cap")]
    CapExceeded { num_nodes: usize, cap: usize },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("unsupported format version: found {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error(transparent)]
    Decode(#[from] crate::format::DecodeError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(op: &'static str, expected: (usize, usize), found: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            op,
            expected,
            found,
        }
    }
}

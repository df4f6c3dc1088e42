//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("{location}: coordinate vector has length {got}, expected dimension {expected}")]
    CoordinateLength {
        location: String,
        got: usize,
        expected: usize,
    },

    #[error("{location}: duplicate edge (point {point}, patch {patch})")]
    DuplicateEdge {
        location: String,
        point: usize,
        patch: usize,
    },

    #[error("{location}: {kind} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        location: String,
        kind: &'static str,
        index: usize,
        max: usize,
    },

    #[error("point {0} does not appear in any patch")]
    UnusedPoint(usize),

    #[error("patch {0} has no members")]
    EmptyPatch(usize),

    #[error("membership graph is disconnected")]
    Disconnected,

    #[error("shifted Laplacian is singular; the membership graph appears disconnected")]
    SingularLaplacian,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("symmetric eigendecomposition did not converge")]
    EigenFailure,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not orthogonal: ||O^T O - I||_F = {0:.3e}")]
    NotOrthogonal(f64),

    #[error("infeasible generator parameters: {0}")]
    InfeasibleParams(String),

    #[error("clustering produced an empty cluster after {0} attempts")]
    EmptyCluster(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

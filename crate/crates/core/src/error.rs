use thiserror::Error;

use crate::designs::MaximalRankStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("malformed design: {0}")]
    MalformedDesign(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Dense 2^N materialization was requested above the configured cap.
    #[error("N = {n} exceeds the dense materialization cap of {cap}")]
    Capacity { n: usize, cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Cholesky pivot fell below tolerance; `pivot` is the original coordinate index.
    #[error("singular covariance: conditional variance {value:e} at coordinate {pivot}")]
    SingularCovariance { pivot: usize, value: f64 },

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("no maximal-rank construction for N = {n}, K = {k} (status: {status})")]
    MaximalUnavailable {
        n: usize,
        k: usize,
        status: MaximalRankStatus,
    },

    #[error("covariance identity violated at ({i}, {j}): {detail}")]
    SigmaIdentity { i: usize, j: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::MalformedDesign(msg.into())
    }
}

/// Default upper bound on N for anything that materializes all 2^N genotypes.
pub const DEFAULT_DENSE_CAP: usize = 20;

/// Hard ceiling on the cap itself; genotype indices are packed into a `u64`
/// and anything beyond this would not fit in memory anyway.
pub const MAX_DENSE_CAP: usize = 30;

pub(crate) fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap.min(MAX_DENSE_CAP) {
        return Err(Error::Capacity {
            n,
            cap: cap.min(MAX_DENSE_CAP),
        });
    }
    Ok(())
}

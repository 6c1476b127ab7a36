use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point set: {0}")]
    InvalidPoints(String),

    #[error("invalid clustering: {0}")]
    InvalidClustering(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("empty member set")]
    EmptyMembers,

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("noise labels must be reassigned before computing pair metrics")]
    NoiseLabelsPresent,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("center packing infeasible after {proposals} proposals")]
    PackingInfeasible { proposals: usize },

    #[error("rejection sampling exhausted after {proposals} proposals: {what}")]
    RejectionExhausted { what: &'static str, proposals: usize },

    #[error("empty structured set: every point was thresholded to noise")]
    EmptyStructuredSet,

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("embedding audit failed: max squared-distance error {0:e}")]
    EmbeddingAudit(f64),

    #[error("instance too large for enumeration: {n} points (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("eigendecomposition did not converge for a {0}x{0} matrix")]
    Eigen(usize),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

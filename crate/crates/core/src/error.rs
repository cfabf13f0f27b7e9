use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CfError>;

/// Errors produced by the clustering pipeline and its supporting modules.
#[derive(Debug, Error)]
pub enum CfError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A CSV cell could not be interpreted. Row and column are zero-based
    /// data coordinates (header rows excluded).
    #[error("malformed input at row {row}, column {col}: {reason}")]
    MalformedInput {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A configuration or distribution spec fails validation.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// K-means cannot produce k non-empty clusters from this view.
    #[error("infeasible k: requested {k} clusters but the view has only {distinct} distinct points")]
    InfeasibleK { k: usize, distinct: usize },

    /// An affinity graph vertex has zero total weight, so the normalized
    /// operator is undefined.
    #[error("affinity graph has an isolated vertex at index {index}")]
    IsolatedVertex { index: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Feature profiling found no finite cluster-quality value to reuse for
    /// features that cannot be clustered on their own.
    #[error("degenerate feature profile: no feature admits a finite quality score")]
    DegenerateProfile,

    /// A numerical routine failed to converge or returned non-finite output.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

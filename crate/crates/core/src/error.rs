use alloc::string::String;

/// Errors produced by the algebra, the generator and the solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A one-line form that is not a bijection of `[n]`.
    #[error("not a permutation: {0}")]
    InvalidPermutation(String),

    /// Two objects that must agree in size do not.
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    /// Block lengths must be positive.
    #[error("invalid block structure: {0}")]
    InvalidBlocks(String),

    /// Model parameters that cannot be realized.
    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),

    /// A row index outside `1..=L`.
    #[error("row {row} out of range for a corpus with {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },

    /// The corpus carries no two-valued rows, so no shuffled set can be inferred.
    #[error("shuffle not identifiable: {0}")]
    NotIdentifiable(String),

    /// The first truncation round found its boundary at row zero.
    #[error("alignment failed at round {round}: {reason}")]
    AlignmentFailed { round: usize, reason: String },

    /// A recovered structure does not add up.
    #[error("internal consistency violated: {0}")]
    Inconsistent(String),

    /// An exhaustive enumeration would be too large.
    #[error("search space too large: {0}")]
    TooLarge(String),

    /// A numeric argument outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = core::result::Result<T, Error>;

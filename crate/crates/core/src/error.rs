use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid vertex condition: {0}")]
    Condition(String),

    /// The pair (A, B) does not define a self-adjoint Laplacian.
    #[error("not self-adjoint: {0}")]
    NotSelfAdjoint(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Internal bookkeeping disagreed (e.g. fewer positive eigenvalues of L than of L(0,a)).
    #[error("consistency error: {0}")]
    Consistency(String),
}

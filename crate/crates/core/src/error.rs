use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not hermitian (max |A - A^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("eigen-decomposition did not converge")]
    EigenFailure,

    #[error("singular value decomposition did not converge")]
    SvdFailure,

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("invalid outcome space: {0}")]
    InvalidOutcomeSpace(String),

    #[error("unknown outcome label `{0}`")]
    UnknownAtom(String),

    #[error("outcome spaces differ: {left:?} vs {right:?}")]
    SpaceMismatch { left: Vec<String>, right: Vec<String> },

    #[error("invalid predicate: {}", .0.join("; "))]
    InvalidPredicate(Vec<String>),

    #[error("invalid density state: {0}")]
    InvalidState(String),

    #[error("chain is not monotone at position {index}")]
    ChainNotMonotone { index: usize },

    #[error("empty chain")]
    EmptyChain,

    #[error("program is not trace preserving (max |C*(I) - I| = {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("program is not positive: output minimum eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error("program has no Kraus representation")]
    NoKraus,

    #[error("instrument is incomplete (max |sum M^dagger M - I| = {deviation:e})")]
    IncompleteInstrument { deviation: f64 },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("computation routes disagree by {deviation:e}")]
    RouteDisagreement { deviation: f64 },

    #[error("malformed triple: {0}")]
    MalformedTriple(String),
}

pub type Result<T> = std::result::Result<T, Error>;

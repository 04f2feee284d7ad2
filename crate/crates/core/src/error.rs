use thiserror::Error;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: malformed specs, violated preconditions, inconsistent structures.
    Validation,
    /// A numerical procedure failed to converge or lost stability.
    Numerical,
    /// Reading or writing reports failed.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input {0}")]
    NonFinite(f64),
    #[error("interval index overflow at x = {0}")]
    IndexOverflow(f64),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("inadmissible route: {0}")]
    InadmissibleRoute(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid partition system: {0}")]
    InvalidSystem(String),
    #[error("unsupported system structure: {0}")]
    UnsupportedStructure(String),
    #[error("inconsistent partition system: {0}")]
    InconsistentSystem(String),
    #[error("partition parameters rejected: {0}")]
    RejectedParameters(String),
    #[error("map is not consistent with the partition at cell {cell}: {detail}")]
    Inconsistent { cell: usize, detail: String },
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("root solver failed: {0}")]
    SolverFailure(String),
    #[error("eigen-iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("unstable derivative: Richardson estimates differ by {disagreement:e}")]
    UnstableDerivative { disagreement: f64 },
    #[error("transition matrix is not irreducible: {0}")]
    Reducible(String),
    #[error("grazing reflection at x = {0}")]
    Grazing(f64),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            SolverFailure(_)
            | NonConvergence { .. }
            | UnstableDerivative { .. }
            | Reducible(_)
            | Grazing(_)
            | IndexOverflow(_) => ErrorKind::Numerical,
            Csv(_) | Io(_) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

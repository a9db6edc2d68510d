use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("Hermitian eigensolver did not converge (Frobenius norm {norm:e})")]
    EigenFailed { norm: f64 },

    #[error("matrix exponential overflows: largest eigenvalue {max_eigenvalue} exceeds {limit}")]
    Overflow { max_eigenvalue: f64, limit: f64 },

    #[error("matrix is not positive definite: eigenvalue {min_eigenvalue:e} (largest {max_eigenvalue:e})")]
    NotPositiveDefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("cannot normalize matrix with trace {trace:e}")]
    NotNormalizable { trace: f64 },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("Born probability of element {index} is non-positive ({value:e})")]
    NonPositiveLikelihood { index: usize, value: f64 },

    #[error("measurement ensemble is empty or numerically zero")]
    EmptyEnsemble,

    #[error("invalid measurement ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("elements {first} and {second} do not commute (residual {residual:e})")]
    NotCommuting {
        first: usize,
        second: usize,
        residual: f64,
    },

    #[error("line search failed after {evaluations} evaluations")]
    LineSearchFailed { evaluations: usize },

    #[error("negative return {value} at row {row}, column {column}")]
    InvalidReturns { row: usize, column: usize, value: f64 },

    #[error("asset {column} has no positive return in any period")]
    DegenerateAsset { column: usize },

    #[error("solver invariant violated: {0}")]
    InvariantViolated(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

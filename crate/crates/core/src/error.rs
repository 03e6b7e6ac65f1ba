use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("two-body tensor violates {0} symmetry")]
    SymmetryViolation(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NonHermitianInput(f64),

    #[error("invalid density operator: {0}")]
    InvalidDensityOperator(String),

    #[error("operator acts on {found}, expected {expected}")]
    BasisMismatch { expected: String, found: String },

    #[error("potential is not traceless (trace {0:.3e})")]
    NonZeroTrace(f64),

    #[error("1RDM is not representable by a Gibbs state: {0}")]
    NonRepresentable(String),

    #[error("Newton iteration did not converge within {0} iterations")]
    MaxIterations(usize),

    #[error("occupations are infeasible: {0}")]
    InfeasibleOccupations(String),

    #[error("polytope decomposition failed: residual {0:.3e}")]
    DecompositionFailure(f64),

    #[error("1RDM is not N-representable: {0}")]
    NotRepresentable(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("eigendecomposition failed to converge")]
    Eigen,
}

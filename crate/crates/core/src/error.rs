use thiserror::Error;

/// Errors produced by the tripartite entanglement toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M†| = {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("{routine} did not converge after {sweeps} sweeps")]
    NoConvergence { routine: &'static str, sweeps: usize },
    #[error("eigenvalue {value:.3e} lies outside the admissible spectrum")]
    DomainError { value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state vector has zero norm and cannot be normalized")]
    NotNormalizable,
    #[error("vector is not normalized (norm² = {norm_sqr:.12})")]
    NotNormalized { norm_sqr: f64 },
    #[error("measurement basis is not unitary (max |U†U - I| = {defect:.3e})")]
    BasisNotUnitary { defect: f64 },
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("invalid direction: i and j must differ (both {0})")]
    SameIndex(usize),
    #[error("branch {index} has probability {probability:.3e} at or below the pruning threshold")]
    DegenerateBranch { index: usize, probability: f64 },
    #[error("first-order RDM change is not traceless (trace = {trace:.3e})")]
    NotTraceless { trace: f64 },
    #[error("basis is not stationary (worst |S̄₁| = {residual:.3e})")]
    NotStationary { residual: f64 },
    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

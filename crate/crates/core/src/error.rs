use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

/// Every fallible operation in the crate returns this.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: deviation {deviation:e} exceeds {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("eigenvalues outside the admissible interval: {values:?}")]
    SpectrumOutOfDomain { values: Vec<f64> },

    #[error("invalid exponent {0}")]
    InvalidExponent(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("superoperator is singular or ill-conditioned (smallest singular value {sigma_min:e}, condition {condition:e})")]
    SingularSuperoperator { sigma_min: f64, condition: f64 },

    #[error("matrix is singular or ill-conditioned (condition {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("inputs {i} and {j} do not commute (commutator norm {norm:e})")]
    NotCommuting { i: usize, j: usize, norm: f64 },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("enumeration of {size} points exceeds the limit {limit}")]
    EnumerationTooLarge { size: u128, limit: u128 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("evaluator is not separately convex in coordinate {coordinate} (midpoint gap {gap:e})")]
    SeparateConvexityViolated { coordinate: usize, gap: f64 },

    #[error("pair is not admissible: zero input masses {zero_inputs:?}, zero output masses {zero_outputs:?}")]
    NotAdmissible { zero_inputs: Vec<usize>, zero_outputs: Vec<usize> },

    #[error("state support not contained in the average state support (leak {leak:e})")]
    SupportError { leak: f64 },

    #[error("contraction constant must lie in [0, 1), got {0}")]
    InvalidC(f64),

    #[error("invalid Phi: {0}")]
    InvalidPhi(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal consistency check failed for {what}: deviation {deviation:e}")]
    Inconsistent { what: String, deviation: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

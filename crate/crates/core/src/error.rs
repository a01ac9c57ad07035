use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid factorization: {0}")]
    InvalidFactorization(String),

    #[error("factor index {index} out of range for {factors} factors")]
    InvalidFactorIndex { index: usize, factors: usize },

    #[error("invalid bipartition: {0}")]
    InvalidCut(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("not a density operator: {0}")]
    InvalidState(String),

    #[error("not unitary: max |U^dagger U - 1| = {0:e}")]
    NotUnitary(f64),

    #[error("not a probability vector: {0}")]
    InvalidProbability(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("support of rho is not contained in support of sigma (overlap {overlap:e} on a null direction)")]
    SupportViolation { overlap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("variant index {index} out of range (0..={max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("operation requires a controlled-permutation interaction, got {0}")]
    WrongKind(String),

    #[error("memory entropy must be positive, got {0}")]
    NonPositiveMemoryEntropy(f64),

    #[error("transition map is not invertible: C_max = {c_max} is within 1e-9 of 1/d_S")]
    NotInvertible { c_max: f64 },

    #[error("expected {expected} variant distributions, got {actual}")]
    WrongVariantCount { expected: usize, actual: usize },

    #[error("invalid broadcasting blocks: {0}")]
    InvalidBlocks(String),

    #[error("dense dimension {dim} exceeds the budget of {budget}")]
    DimensionBudgetExceeded { dim: usize, budget: usize },
}

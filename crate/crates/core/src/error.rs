use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not Hermitian (‖M − M*‖_F = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("Hermitian eigensolver did not converge for a {dim}×{dim} matrix")]
    EigenNoConvergence { dim: usize },

    #[error("matrix exponential overflows (largest eigenvalue {max_eigenvalue:e})")]
    ExpOverflow { max_eigenvalue: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("constraint system is infeasible at constraint {index}: {reason}")]
    Infeasible { index: usize, reason: String },

    #[error("constraint Gram matrix is singular; prune dependent constraints first")]
    SingularGram,

    #[error("system is not diagonal: {0}")]
    NotDiagonal(String),

    #[error("level {lambda} is outside the attainable range of Σ b·x on the barrier domain")]
    LevelOutOfRange { lambda: f64 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

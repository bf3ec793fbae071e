use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("QR iteration failed to converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("matrix exponential overflows (norm {norm:e})")]
    Overflow { norm: f64 },

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bracket [{lo}, {hi}] does not straddle the transition")]
    BracketNotStraddling { lo: f64, hi: f64 },

    #[error("no exceptional point found in the sweep")]
    NoExceptionalPoint,

    #[error("no complex quasienergies at parameter {param}")]
    NoComplexStates { param: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

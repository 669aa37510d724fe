use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable index out of range: x{index} with dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("invalid dimension {dim}: {reason}")]
    Dimension { dim: usize, reason: String },
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
    #[error("not space-like at {point:?} (min eigenvalue {min_eig:e})")]
    NotSpacelike { point: Vec<f64>, min_eig: f64 },
    #[error("not convex at {point:?} (min Hessian eigenvalue {min_eig:e})")]
    NotConvex { point: Vec<f64>, min_eig: f64 },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("base point not on graph: X(0) = {offset:?}; configure an offset")]
    BasePointNotOnGraph { offset: Vec<f64> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("lattice error: {0}")]
    Lattice(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("integration failed: {0}")]
    Integration(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

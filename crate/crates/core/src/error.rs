use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series or integral did not converge: {0}")]
    NonConvergence(String),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("coefficient matrix is singular or ill-conditioned: {0}")]
    SingularMatrix(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("Neumann iteration exceeded its budget after {iterations} terms (last increment ratio {ratio:.3e})")]
    IterationBudgetExceeded { iterations: usize, ratio: f64 },
    #[error("singular-cell quadrature failed: {0}")]
    SingularQuadratureFailure(String),
    #[error("tabulated correction does not cover the request: {0}")]
    Coverage(String),
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("fields share no interpolable overlap")]
    EmptyOverlap,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

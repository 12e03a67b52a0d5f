use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval: t_start = {t_start}, t_end = {t_end} (need t_end > t_start)")]
    InvalidInterval { t_start: f64, t_end: f64 },

    #[error("invalid domain ({a}, {b})")]
    InvalidDomain { a: f64, b: f64 },

    #[error("element {level}:{index} is not a leaf of the mesh (stale indicator data)")]
    UnknownElement { level: u8, index: u64 },

    #[error("meshes do not share the same domain and root partition")]
    MeshMismatch,

    #[error("point {x} lies outside the domain ({a}, {b})")]
    OutsideDomain { x: f64, a: f64, b: f64 },

    #[error("maximum refinement level {0} exceeded")]
    LevelOverflow(u8),

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("zero pivot in banded LU at row {0}")]
    SingularMatrix(usize),

    #[error("spatial degree must be at least 1, got {0}")]
    InvalidDegree(usize),

    #[error(
        "initial datum violates the homogeneous Dirichlet condition u = 0 on the boundary: \
         u0(a) = {left}, u0(b) = {right}"
    )]
    BoundaryData { left: f64, right: f64 },

    #[error("unknown problem preset '{0}'")]
    UnknownProblem(String),

    #[error("refinement budget exceeded: {dofs} degrees of freedom")]
    RefinementBudget { dofs: usize },

    #[error("fixed-point iteration stalled after {iterations} iterations (increment {increment})")]
    NoConvergence { iterations: usize, increment: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

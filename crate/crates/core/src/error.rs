use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(
        "face {face} has {arity} vertices; only triangle meshes are accepted, triangulate first"
    )]
    NonTriangularFace { face: usize, arity: usize },

    #[error("mesh has {count} boundary edge(s) in {} hole(s): {cycles:?}", cycles.len())]
    BoundaryEdges {
        count: usize,
        cycles: Vec<Vec<usize>>,
    },

    #[error("non-manifold edges (vertex pair, incident faces): {edges:?}")]
    NonManifoldEdges { edges: Vec<((usize, usize), usize)> },

    #[error("inconsistent face orientation across edges {edges:?}")]
    NonOrientable { edges: Vec<(usize, usize)> },

    #[error("degenerate faces (area below tolerance): {faces:?}")]
    DegenerateFaces { faces: Vec<usize> },

    #[error("vertices not referenced by any face: {vertices:?}")]
    UnreferencedVertices { vertices: Vec<usize> },

    #[error(
        "mesh is disconnected: {unreachable} vertices unreachable from vertex {source_vertex}"
    )]
    Disconnected {
        source_vertex: usize,
        unreachable: usize,
    },

    #[error("eigensolver failed: {message} (max residual {residual:e})")]
    SolverFailed { message: String, residual: f64 },

    #[error("dense {what} limited to {cap} vertices, got {vertices}")]
    DenseCapExceeded {
        what: &'static str,
        vertices: usize,
        cap: usize,
    },

    #[error("t = {t} is below the kernel reliability floor t_min = {t_min} (truncation tail exceeds 1e-8/Vol); use larger t or more eigenpairs")]
    BelowKernelFloor { t: f64, t_min: f64 },

    #[error("quadrature did not reach tol {tol:e} within {panels} panels: best value {best}, error bound {error_bound:e}")]
    QuadratureBudget {
        best: f64,
        error_bound: f64,
        tol: f64,
        panels: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Solver and quadrature failures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverFailed { .. } | Error::QuadratureBudget { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

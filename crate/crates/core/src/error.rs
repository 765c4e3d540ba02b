use thiserror::Error;

use crate::eigen::EigenSolution;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),

    #[error("edge ({u}, {v}) has non-positive or non-finite weight {weight}")]
    InvalidWeight { u: usize, v: usize, weight: f64 },

    #[error("graph has no edges (zero volume)")]
    EmptyGraph,

    #[error(
        "graph is disconnected ({components} components); extract the largest component \
         or add a demand-graph regularizer"
    )]
    Disconnected { components: usize },

    #[error("vertex {0} is isolated (zero degree)")]
    IsolatedVertex(usize),

    #[error("pair ({u}, {v}) appears as both must-link and cannot-link")]
    ConflictingConstraint { u: usize, v: usize },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    SolverNotConverged { iterations: usize, residual: f64 },

    #[error("eigensolver did not converge in {} iterations (max residual {:e})", .0.iterations, .0.max_residual())]
    EigenNotConverged(Box<EigenSolution>),

    #[error("ill-posed problem: {0}")]
    IllPosed(String),

    #[error("eigenvector column {0} lies in the null space of L_H")]
    DegenerateEigenvector(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported image format: {0}")]
    UnsupportedImage(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the numerical kernels, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SolverNotConverged { .. }
            | Error::EigenNotConverged(_)
            | Error::IllPosed(_)
            | Error::DegenerateEigenvector(_) => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

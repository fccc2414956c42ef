use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure classes of the winding pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("missing boundary tag {0:?}")]
    MissingBoundaryTag(crate::geometry::BoundaryTag),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("flipped triangle in surface coordinates: {0} triangles with non-positive area")]
    FlippedSurfaceMap(usize),

    #[error("point ({0:.6}, {1:.6}, {2:.6}) lies outside the mesh")]
    OutsideMesh(f64, f64, f64),

    #[error("trace failed: {0}")]
    Trace(#[from] crate::tracing::TraceError),

    #[error("curves intersect or coincide (separation {0:e})")]
    SingularPair(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field line from node {node} failed: {source}")]
    NodeTrace {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("field is not solenoidal (rms relative divergence {rms:e} >= {tol:e})")]
    NotSolenoidal { rms: f64, tol: f64 },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

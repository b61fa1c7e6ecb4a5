use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported algebra: {0}")]
    UnsupportedAlgebra(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("axis {axis} out of range for a {dim}-dimensional lattice")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("invalid mesh: {0}")]
    InvalidMesh(&'static str),
    #[error("singular vierbein at site {site} (det = {det:e})")]
    SingularVierbein { site: usize, det: f64 },
    #[error("coupling must be non-negative, got {0}")]
    NegativeCoupling(f64),
    #[error("divergence detected at step {step}: field norm {norm:e}")]
    Divergence { step: usize, norm: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Newton iteration diverged at constraint level {level} (residual {residual:e})")]
    NewtonDivergence { level: usize, residual: f64 },
    #[error("point violates the current constraints (residual {0:e})")]
    OffConstraint(f64),
    #[error("ambiguous rank decision: singular value {sigma:e} within 10x of threshold {threshold:e}")]
    AmbiguousRank { sigma: f64, threshold: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

use thiserror::Error;

use crate::lattice::SiteVector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sites {0} and {1} are not nearest neighbours")]
    NotAdjacent(SiteVector, SiteVector),
    #[error("site {0} is outside the domain")]
    OutsideDomain(SiteVector),
    #[error("boxes overlap")]
    Overlap,
    #[error("operation requires a torus")]
    NotTorus,
    #[error("region must be an axis-aligned box")]
    NotABox,
    #[error("cannot empty the tracer site {0}")]
    TracerCleared(SiteVector),
    #[error("tracer placed on an empty site {0}")]
    TracerOnVacancy(SiteVector),
    #[error("configuration has no tracer")]
    NoTracer,
    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("invalid constraint: {0}")]
    InvalidSpec(String),
    #[error("t_max must be positive, got {0}")]
    InvalidTime(f64),
    #[error("density must lie in [0,1], got {0}")]
    InvalidDensity(f64),
    #[error("dynamics require a torus with every side >= 3")]
    RequiresTorus,
    #[error("the origin is not a site of the domain")]
    OriginOutside,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TracerError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("fit window contains {0} sample times; need at least 2")]
    DegenerateWindow(usize),
    #[error("need at least {need} replicas, got {got}")]
    TooFewReplicas { got: usize, need: usize },
    #[error("exact enumeration over {sites} sites exceeds the cap of {cap}; use monte_carlo")]
    WindowTooLarge { sites: usize, cap: usize },
    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    CgNotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("search budget must be positive")]
    BadBudget,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenormError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Tracer(#[from] TracerError),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("operation supports d = 2 only, got d = {0}")]
    UnsupportedDim(usize),
    #[error("largest open cluster has {largest} vertices, below the threshold {threshold}")]
    NotPercolating { largest: usize, threshold: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Renorm(#[from] RenormError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },
    #[error("frameability budget exhausted while framing {0}")]
    BudgetExhausted(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Crate-level error carrying the module the failure came from.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lattice-core: {0}")]
    Lattice(#[from] LatticeError),
    #[error("ka-dynamics: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("tracer-diffusion: {0}")]
    Tracer(#[from] TracerError),
    #[error("frameability: {0}")]
    Frame(#[from] FrameError),
    #[error("renormal-percolation: {0}")]
    Renorm(#[from] RenormError),
    #[error("comparison-paths: {0}")]
    Path(#[from] PathError),
}

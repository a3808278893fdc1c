use thiserror::Error;

/// Unified error type for the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("horizon exceeded: t0 + t = {reached} is past T = {horizon}")]
    HorizonExceeded { reached: f64, horizon: f64 },
    #[error("mesh too coarse: increment {increment} exceeds delta = {delta}")]
    MeshTooCoarse { increment: f64, delta: f64 },
    #[error("flow not applicable at t0 = {t0}")]
    NotApplicable { t0: f64 },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("state outside the convex body (distance {dist})")]
    NotInBody { dist: f64 },
    #[error("degenerate pair: zero distance between sample states")]
    DegeneratePair,
    #[error("too few points for a fit: {n}")]
    TooFewPoints { n: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

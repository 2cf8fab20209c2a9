use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inverse undefined for b=0")]
    InverseUndefined,
    #[error("no inverse supplied and Newton fallback diverged at ({x}, {y})")]
    NoInverse { x: f64, y: f64 },
    #[error("complex roots (1+4a = {0} < 0)")]
    ComplexRoots(f64),
    #[error("Newton failed: {0}")]
    NewtonFailed(String),
    #[error("fixed points coincide (separation {0:e})")]
    PointsCoincide(f64),
    #[error("not a saddle: eigenvalue moduli {0} and {1}")]
    NotSaddle(f64, f64),
    #[error("refinement budget exceeded ({0} vertices)")]
    RefinementBudget(usize),
    #[error("degenerate hyperbolic frame (|log H| = {0:e})")]
    Degenerate(f64),
    #[error("orbit left the domain after {0} steps")]
    OrbitEscaped(usize),
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("multiple sign changes found: {0:?}")]
    MultipleSignChanges(Vec<f64>),
    #[error("multiple roots: angle function not monotone ({0} sign changes)")]
    MultipleRoots(usize),
    #[error("singular parametrization (|velocity| = {0:e})")]
    SingularParametrization(f64),
    #[error("non-geometric decay: successive ratios {0:?}")]
    NonGeometric(Vec<f64>),
    #[error("no valid N <= {cap} (d(C, Omega) = {distance:e})")]
    NoValidN { cap: usize, distance: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("unknown perturbation {0:?}")]
    UnknownPerturbation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

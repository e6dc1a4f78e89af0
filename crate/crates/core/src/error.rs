use thiserror::Error;

/// Errors raised by the engine. Variants map onto the failure modes of the
/// individual operations; the CLI maps them onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("invalid reflection law: {0}")]
    InvalidLaw(String),
    #[error("curvature table does not close: {0}")]
    NonClosedCurve(String),
    #[error("ray is tangent to the boundary (cos = {cos:e})")]
    TangentRay { cos: f64 },
    #[error("origin lies outside the body (signed distance {distance:e})")]
    OutsideBody { distance: f64 },
    #[error("points coincide (distance {distance:e})")]
    CoincidentPoints { distance: f64 },
    #[error("no symmetric window with positive density")]
    NoPositiveCore,
    #[error("time {t} lies beyond the simulated span [0, {horizon}]")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("degenerate bound: {0}")]
    DegenerateBound(String),
    #[error("non-positive alpha ({0:e}); try a smaller epsilon")]
    NonPositiveAlpha(f64),
    #[error("non-positive p ({0:e}); zeta too small or too large")]
    NonPositiveP(f64),
    #[error("no admissible window: {0}")]
    NoAdmissibleWindow(String),
    #[error("degenerate geometry: {0}")]
    GeometryDegenerate(String),
    #[error("no admissible grid point")]
    EmptyFeasibleSet,
    #[error("histogram shapes differ")]
    ShapeMismatch,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("curve axis ({curve}) does not match certificate axis ({certificate})")]
    AxisMismatch { curve: String, certificate: String },
    #[error("lower-bound profile violated: density {density:e} below level {level:e}")]
    ProfileViolated { level: f64, density: f64 },
    #[error("rejection sampler exhausted after {0} proposals")]
    RejectionExhausted(usize),
    #[error("coupling not supported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

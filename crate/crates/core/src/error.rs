use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown function `{name}` at {pos}")]
    UnknownFunction { name: String, pos: usize },

    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {0} lies outside the carrier")]
    PointOutsideCarrier(f64),

    #[error("interval set {0} is not inside the codomain")]
    SetOutsideCodomain(String),

    #[error("interval set {0} is not inside the support")]
    SetOutsideSupport(String),

    #[error("invalid interval set: {0}")]
    InvalidIntervalSet(String),

    #[error("quadrature did not converge after {evals} evaluations (estimate {estimate:e})")]
    QuadratureFailure { estimate: f64, evals: usize },

    #[error("probability {0} outside (0,1)")]
    ProbabilityOutOfRange(f64),

    #[error("quantile search did not converge for u = {0}")]
    QuantileNonConvergence(f64),

    #[error("cdf is not strictly increasing: {0}")]
    CdfNotStrictlyIncreasing(String),

    #[error("part {k} has zero or infinite mass {mass}")]
    ZeroOrInfinitePartMass { k: usize, mass: f64 },

    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown selector `{0}`")]
    UnknownSelector(String),
}

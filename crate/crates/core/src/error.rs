use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is infeasible (worst violation {violation:.3e})")]
    Infeasible { violation: f64 },

    #[error("zero direction")]
    ZeroDirection,

    #[error("empty active set")]
    EmptyActiveSet,

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("operation requires halfspace data for this region")]
    MissingHalfspaces,

    #[error("nnls did not converge after {iterations} passes")]
    NnlsNonConvergence { iterations: usize },

    #[error("step size {alpha} outside [0, {alpha_max}]")]
    StepOutOfRange { alpha: f64, alpha_max: f64 },

    #[error("active-set weights drifted off the simplex (sum {sum})")]
    WeightDrift { sum: f64 },

    #[error("point lies outside the ball beyond tolerance")]
    OutsideBall,

    #[error("short step chain exceeded its safety cap of {cap} inner steps")]
    SafetyCap { cap: usize },

    #[error("objective is missing {0}")]
    MissingConstant(&'static str),

    #[error("x is not a proper convex combination of any atom subset")]
    NotRepresentable,

    #[error("atom cap exceeded: {count} atoms > {cap}")]
    AtomCap { count: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("reference value f* = {f_star} exceeds observed value {observed} (wrong f*)")]
    WrongReference { f_star: f64, observed: f64 },
}

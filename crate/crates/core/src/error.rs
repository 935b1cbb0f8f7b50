use thiserror::Error;

/// Failure modes shared by every numerical kernel in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shooting bracket [{lo}, {hi}] does not straddle the decay/blow-up dichotomy")]
    BracketNotFound { lo: f64, hi: f64 },
    #[error("no convergence after {iterations} iterations: {what}")]
    NonConvergence { what: String, iterations: usize },
    #[error("fit window holds {nodes} nodes, need at least {required}")]
    WindowTooSmall { nodes: usize, required: usize },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("separation {norm} outside resolved range (max {max})")]
    OmegaOutOfRange { norm: f64, max: f64 },
    #[error("bubbles unresolved: kappa*z = {kz} exceeds r_max = {r_max}")]
    UnresolvedBubbles { kz: f64, r_max: f64 },
    #[error("bubble leaves box: needs half-width {needed}, box has {available}")]
    BubbleLeavesBox { needed: f64, available: f64 },
    #[error("scale under-resolved: lambda = {lambda} below {limit}")]
    ScaleUnderResolved { lambda: f64, limit: f64 },
    #[error("newton iteration diverged: {0}")]
    NewtonDivergence(String),
    #[error("newton iteration stalled with residual {residual:e}")]
    NewtonStall { residual: f64 },
    #[error("step size underflow at s = {s}")]
    StepUnderflow { s: f64 },
    #[error("shooting endpoints exit with the same sign ({sign})")]
    SameSignEndpoints { sign: i32 },
    #[error("non-finite value detected at t = {t}")]
    NanDetected { t: f64 },
    #[error("blow-up guard tripped at t = {t}: max amplitude {amp} vs initial {initial}")]
    BlowUpGuard { t: f64, amp: f64, initial: f64 },
    #[error("resampling under-resolved: {0}")]
    ResampleUnderResolved(String),
    #[error("need at least {required} samples, got {got}")]
    InsufficientSamples { got: usize, required: usize },
    #[error("field is outside the closeness window: distance {distance} > {delta}")]
    OutsideClosenessWindow { distance: f64, delta: f64 },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors shared across the simulation, analytics and harness modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or model parameter is outside its domain.
    #[error("invalid parameter for {what}: {detail}")]
    InvalidParameter { what: &'static str, detail: String },

    /// Mean offspring number at or above one; clusters may be infinite.
    #[error("supercritical branching: kappa = {kappa} must be < 1")]
    Supercritical { kappa: f64 },

    /// A cluster cascade exceeded the configured node cap.
    #[error("runaway cluster: exceeded node cap of {cap} events (check subcriticality)")]
    RunawayCluster { cap: usize },

    /// Stable-law parameterization outside what the limits need.
    #[error("unsupported stable parameterization: {detail}")]
    UnsupportedParameterization { detail: String },

    /// The probed tail does not decrease through 1/n.
    #[error("no solution for normalizing sequence: {detail}")]
    NoSolution { detail: String },

    /// A closed-form moment required by a formula does not exist.
    #[error("moment does not exist: {detail}")]
    MomentDoesNotExist { detail: String },

    /// Neither tail classification of (RV1)-(RV3) applies.
    #[error("unsupported tail regime: {detail}")]
    UnsupportedRegime { detail: String },

    /// Exact pmf comparison requested for a mechanism where it is unknown.
    #[error("unsupported comparison: {detail}")]
    UnsupportedComparison { detail: String },

    /// Fixed-point iteration failed to contract within the cap.
    #[error("fixed-point iteration did not converge within {iterations} iterations")]
    ContractionFailure { iterations: usize },

    /// Intensity queried before the last history point.
    #[error("time ordering violation: t = {t} is earlier than history end {history_end}")]
    TimeOrdering { t: f64, history_end: f64 },

    /// The thinning bound was exceeded by the true intensity.
    #[error("thinning oracle unsound: intensity {lambda} exceeded dominating bound {bound} at t = {t}")]
    OracleUnsound { lambda: f64, bound: f64, t: f64 },

    /// A query time falls outside the simulated window.
    #[error("time {t} outside simulated window [{start}, {end}]")]
    OutOfWindow { t: f64, start: f64, end: f64 },

    /// An experiment precondition failed outright (not merely outside hypotheses).
    #[error("precondition failed: {detail}")]
    Precondition { detail: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            what,
            detail: detail.into(),
        }
    }

    /// Stable machine-readable tag used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::Supercritical { .. } => "supercritical",
            Error::RunawayCluster { .. } => "runaway-cluster",
            Error::UnsupportedParameterization { .. } => "unsupported-parameterization",
            Error::NoSolution { .. } => "no-solution",
            Error::MomentDoesNotExist { .. } => "moment-does-not-exist",
            Error::UnsupportedRegime { .. } => "unsupported-regime",
            Error::UnsupportedComparison { .. } => "unsupported-comparison",
            Error::ContractionFailure { .. } => "contraction-failure",
            Error::TimeOrdering { .. } => "time-ordering",
            Error::OracleUnsound { .. } => "oracle-unsound",
            Error::OutOfWindow { .. } => "out-of-window",
            Error::Precondition { .. } => "precondition",
            Error::Io(_) => "io",
        }
    }
}

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter vector has non-finite component at index {index}")]
    NonFiniteParameter { index: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("loss evaluation returned a non-finite value ({value}) at measurement {measurement_index}")]
    NonFiniteLoss { value: f64, measurement_index: u64 },

    #[error("invalid gain configuration: {0}")]
    InvalidGain(String),

    #[error("feasibility not restored within {cap} pullback steps at iteration k={k}")]
    PullbackBudgetExceeded { k: usize, cap: usize },

    #[error("iterate diverged at iteration k={k}: norm {norm:e} exceeds bound {bound:e}")]
    DivergedIterate { k: usize, norm: f64, bound: f64 },

    #[error("initial point coincides with the optimum; relative error is undefined")]
    DegenerateBaseline,

    #[error("window of {window} steps exceeds trace length {len}")]
    WindowTooLarge { window: usize, len: usize },

    #[error("two-sample test needs nonzero pooled variance")]
    ZeroVariance,

    #[error("two-sample test needs at least two observations per sample (got {0})")]
    TooFewSamples(usize),

    #[error("active constraint gradients are linearly dependent (LICQ fails)")]
    RankDeficientActiveSet,

    #[error("problem does not expose an analytic loss gradient")]
    MissingLossGradient,

    #[error("problem has no reference optimum")]
    MissingReference,

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("configuration value for `{key}` out of range: {constraint}")]
    OutOfRangeValue { key: String, constraint: String },

    #[error("malformed configuration: {0}")]
    MalformedConfig(String),

    #[error("{algorithm}: {failed} of {total} replicates failed (more than 10%)")]
    FailureThreshold {
        algorithm: String,
        failed: usize,
        total: usize,
    },

    #[error("traces were not retained; enable series emission before running")]
    TracesNotRetained,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that originate in the configuration rather than the run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidGain(_)
                | Error::UnknownKey(_)
                | Error::OutOfRangeValue { .. }
                | Error::MalformedConfig(_)
        )
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("measure `{num}` is not absolutely continuous w.r.t. `{den}` at outcome {outcome}")]
    AbsoluteContinuityViolation {
        num: String,
        den: String,
        outcome: usize,
    },
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("size limit exceeded: {size} states (cap {cap})")]
    SizeLimit { size: u128, cap: u128 },
    #[error("no equivalent martingale measure at step {step}: {reason}")]
    NoArbitrageViolation { step: usize, reason: String },
    #[error("invalid path state: {0}")]
    InvalidState(String),
    #[error("payoff is not a European call")]
    NotACall,
    #[error("payoff depends on the whole path; only terminal-value tests are supported here")]
    PathDependenceUnsupported,
    #[error("unsupported test: {0}")]
    UnsupportedTest(String),
    #[error("invalid tangent: {0}")]
    InvalidTangent(String),
    #[error("theta = {theta} outside [0, {max})")]
    ThetaOutOfRange { theta: f64, max: f64 },
    #[error("one-period martingale lemma hypothesis violated: {0}")]
    LemmaHypothesisViolated(String),
    #[error("malformed JSON spec: {0}")]
    Json(#[from] serde_json::Error),
}

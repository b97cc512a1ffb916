use thiserror::Error;

pub type Result<T> = std::result::Result<T, RiskError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("scenario space has no states")]
    EmptySpace,
    #[error("labels and probabilities differ in length ({labels} vs {probs})")]
    LengthMismatch { labels: usize, probs: usize },
    #[error("negative probability {prob} for state `{label}`")]
    NegativeProbability { label: String, prob: f64 },
    #[error("probabilities sum to {sum}, expected 1 within 1e-12")]
    ProbabilitySumMismatch { sum: f64 },
    #[error("duplicate state label `{0}`")]
    DuplicateLabel(String),
    #[error("invalid probability literal `{0}`")]
    InvalidProbability(String),
    #[error("position value at state {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("position has {found} values but the scenario space has {expected} states")]
    UnboundPosition { expected: usize, found: usize },
    #[error("asset price must be strictly positive, got {0}")]
    NonPositivePrice(f64),
    #[error("asset payoff is negative at state {index}")]
    NegativePayoff { index: usize },
    #[error("asset payoff is identically zero")]
    ZeroPayoff,
    #[error("alpha must lie strictly inside (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("asset pays nothing on every positive-probability state")]
    DegenerateAsset,
    #[error("acceptance predicate `{name}` is not monotone: accepted X but rejected some Y >= X")]
    NonMonotonePredicate { name: String },
    #[error("acceptance set is not declared conic")]
    NotConic,
    #[error("capital requirement is not finite at the given position")]
    NotFinite,
    #[error("{count} positive-probability states exceed the subset-search limit of {limit}")]
    TooManyStates { count: usize, limit: usize },
    #[error("invalid grid: {0}")]
    DegenerateGrid(String),
    #[error("eligible assets must share the same price ({0} vs {1})")]
    PriceMismatch(f64, f64),
    #[error("{0} is not supported by this solver")]
    UnsupportedAcceptance(&'static str),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("zero coefficient in ordinal term")]
    ZeroCoefficient,

    #[error("ordinal {0} is not a limit ordinal")]
    NotLimit(String),

    #[error("ordinal {0} is not a successor ordinal")]
    NotSuccessor(String),

    #[error("invalid diamond spec: {0}")]
    InvalidSpec(String),

    #[error("point budget exceeded: construction needs at least {estimated} points, budget is {budget}")]
    BudgetExceeded { estimated: u128, budget: u128 },

    #[error("point index {index} out of range for a space with {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unknown point address {0:?}")]
    UnknownAddress(String),

    #[error("molecule needs two distinct points, got {0} twice")]
    SamePoint(usize),

    #[error("function is not total: no value at point {0}")]
    PartialFunction(usize),

    #[error("function is not {bound}-Lipschitz: |f({x}) - f({y})| = {gap} exceeds {bound} * d = {allowed}")]
    NotLipschitz {
        x: usize,
        y: usize,
        gap: String,
        allowed: String,
        bound: String,
    },

    #[error("partial function has an empty domain")]
    EmptyDomain,

    #[error("function must vanish at point {point}, found {value}")]
    NonZeroAtOrigin { point: usize, value: String },

    #[error("branch index {branch} not allowed (valid range {min}..={max})")]
    BranchIndex { branch: usize, min: usize, max: usize },

    #[error("branch indices must differ, got {0} twice")]
    SameBranch(usize),

    #[error(
        "insufficient branching at alpha = {level}: no pair 2 <= i < j <= {branches} escapes the neighborhood; retry with at least {retry_with} branches"
    )]
    InsufficientBranching {
        level: String,
        branches: usize,
        retry_with: usize,
    },

    #[error("depth mismatch: {0}")]
    DepthMismatch(String),

    #[error("support leaks outside the designated copy: {0}")]
    SupportLeak(String),

    #[error("vector norm {0} exceeds 1")]
    NormTooLarge(String),

    #[error("neighborhood is not centered at the expected vector")]
    CenterMismatch,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("not a metric: {0}")]
    NotMetric(String),

    #[error("spaces do not match: {0}")]
    MismatchedSpaces(String),

    #[error("invalid transport certificate: {0}")]
    Certificate(String),

    #[error("integer overflow in exact arithmetic")]
    Overflow,

    #[error("invalid rational {0:?}")]
    BadRational(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{0}")]
    Invalid(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

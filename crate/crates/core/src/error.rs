use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("value is not rational")]
    NotRational,
    #[error("weighted sum of the matrices is not zero")]
    NotInKernelRelation,
    #[error("matrix at position {0} does not have rank one")]
    RankNotOne(usize),
    #[error("function is not {{0,1}}-valued")]
    NotIndicator,
    #[error("function is not ({s}, {alpha})-quasiregular")]
    NotQuasiregular { s: usize, alpha: String },
    #[error("restriction is inconsistent (empty coset)")]
    InconsistentRestriction,
    #[error("restriction domain meets the context domain non-trivially")]
    DomainOverlap,
    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),
    #[error("step budget exhausted after {} steps", .0.chain.len())]
    StepBudgetExhausted(Box<crate::families::Bootstrap>),
    #[error("spectrum has no negative eigenvalue")]
    NoNegativeEigenvalue,
    #[error("no generator of the multiplicative group found")]
    GeneratorSearchFailed,
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}

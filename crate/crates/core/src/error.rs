use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the library. Variants are grouped roughly by the
/// module that produces them.
#[derive(Debug, Error)]
pub enum Error {
    // numerics
    #[error("matrix is not Hermitian: max |A - A^H| = {deviation:e} exceeds {tolerance:e}")]
    NonHermitian { deviation: f64, tolerance: f64 },
    #[error("eigensolver failed to converge on a {dim}x{dim} matrix")]
    ConvergenceFailure { dim: usize },
    #[error("quadrature grid is not uniform over one period: {0}")]
    NonUniformGrid(String),
    #[error("function evaluation failed at {0}")]
    EvaluationFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    // quantum
    #[error("observables `{first}` and `{second}` do not commute: max |[A, B]| = {norm:e}")]
    NonCommuting {
        first: String,
        second: String,
        norm: f64,
    },
    #[error("joint eigensolver failed: {0}")]
    EigensolverFailure(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coefficient table is incomplete: missing entry {0}")]
    IncompleteTable(String),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    // classical
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("turning point between base point and q = {q:?} at K = {k:?}; momentum branch is ambiguous")]
    BranchAmbiguity { q: Vec<f64>, k: Vec<f64> },
    #[error("point outside chart domain: {0}")]
    OutOfDomain(String),
    #[error("density support is not covered by the chart: {0}")]
    SupportOutsideChart(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("angle grid of {points} points cannot resolve |Lambda| = {lambda}; need at least {required}")]
    NyquistViolation {
        points: usize,
        lambda: i64,
        required: usize,
    },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("density `{0}` has no sampler")]
    NoSampler(String),

    // levelset
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("test function support touches a singular region: {0}")]
    SingularSupport(String),
    #[error("observable grid does not cover the density support: {0}")]
    SupportNotCovered(String),

    // cli / report
    #[error("cannot read `{path}`: {reason}")]
    Unreadable { path: String, reason: String },
    #[error("schema violation at `{path}`: {reason}")]
    SchemaViolation { path: String, reason: String },
    #[error("cannot write `{path}`: {reason}")]
    WriteFailure { path: String, reason: String },
    #[error("{context}: {source}")]
    Scenario {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn schema(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::SchemaViolation {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Wraps a module error with the scenario that produced it.
    pub fn in_scenario(self, context: impl Into<String>) -> Self {
        Error::Scenario {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, unwrapping scenario context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Scenario { source, .. } => source.root(),
            other => other,
        }
    }
}

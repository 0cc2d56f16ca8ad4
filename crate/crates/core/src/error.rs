use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("space mismatch: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },

    #[error("operation requires {expected} space, got {got}")]
    WrongSpace { expected: &'static str, got: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("case not covered by a closed form: {0}")]
    Uncovered(String),

    #[error("only the sampling oracle can resolve this case: {0}")]
    OracleOnly(String),

    #[error("point is not on the graph of the mapping: {0}")]
    NotOnGraph(String),

    #[error("zero denominator in limsup quotient")]
    ZeroDenominator,

    #[error("dimension {dim} too large for brute-force search (max {max})")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("singular linear system")]
    Singular,

    #[error("remez exchange did not converge after {iterations} iterations (levelled error {levelled}, max residual {max_residual})")]
    RemezNonConvergence {
        iterations: usize,
        levelled: f64,
        max_residual: f64,
        trace: Vec<f64>,
    },

    #[error("registry and oracle disagree: {0}")]
    AuditDisagreement(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the fuzzy-sphere engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("axis index {0} out of range (expected 1..=3)")]
    AxisOutOfRange(usize),

    #[error("monomial x1^{a} x2^{b} x3^{c} is not canonical (x3 exponent must be <= 1)")]
    NonCanonicalMonomial { a: u32, b: u32, c: u32 },

    #[error("truncation overflow: canonical degree {degree} exceeds truncation L = {cap}")]
    TruncationOverflow { degree: usize, cap: usize },

    #[error("parameter mismatch between operands")]
    ParameterMismatch,

    #[error("eigenvalue clustering failure: residual {residual:.3e} for l = {l} exceeds tolerance")]
    EigenClustering { l: usize, residual: f64 },

    #[error("metric is singular (det = {0:.3e})")]
    SingularMetric(f64),

    #[error("metric is not symmetric (asymmetry {0:.3e})")]
    NonSymmetricMetric(f64),

    #[error("metric specification could not be parsed: {0}")]
    MetricParse(String),

    #[error("Gram matrix for l = {0} is not positive-definite")]
    GramNotPositive(usize),

    #[error("conjugating matrix is not unimodular (det = {0})")]
    NonUnimodular(String),

    #[error("sign pair ({0}, {1}) is not in the odd KO table")]
    InvalidSigns(i8, i8),

    #[error("no real structure solves the Clifford compatibility equations")]
    NoRealStructure,

    #[error("lambda_p = {lambda_p} does not equal 1/n for n = {n}")]
    ReductionMismatch { lambda_p: f64, n: usize },

    #[error("matrix size n = {0} must be at least 2")]
    InvalidMatrixSize(usize),

    #[error("block l = {l} is not hermitian (residual {residual:.3e})")]
    NonHermitian { l: usize, residual: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("block index l = {l} exceeds truncation L = {cap}")]
    BlockOutOfRange { l: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("joint pmf is empty")]
    EmptySource,
    #[error("joint pmf is not rectangular: row {row} has {got} entries, expected {expected}")]
    RaggedSource { row: usize, got: usize, expected: usize },
    #[error("joint pmf entry ({x},{y}) = {value} is negative or not finite")]
    NegativeEntry { x: usize, y: usize, value: f64 },
    #[error("joint pmf sums to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("marginal p_X({x}) is zero")]
    ZeroMarginalX { x: usize },
    #[error("invalid type vector: {0}")]
    InvalidType(String),
    #[error("deviation delta = {0} must be nonnegative")]
    NegativeDelta(f64),
    #[error("type does not have full support")]
    TypeNotFullSupport,
    #[error("variance is zero; the requested quantity is undefined")]
    ZeroVariance,
    #[error("mutual information I(X;Y) is zero")]
    ZeroMutualInfo,
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("enumeration needs {needed} items but the budget is {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },
    #[error("sequence has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("no jar member falls in the received bin")]
    DecodeFailure,
    #[error("error target eps = {0} must lie in (0,1)")]
    InvalidEps(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no calibration grid value satisfies the constraint: {0}")]
    Infeasible(String),
    #[error("theorem hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("malformed codeword: {0}")]
    MalformedCodeword(String),
    #[error("source file: {0}")]
    SourceFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;

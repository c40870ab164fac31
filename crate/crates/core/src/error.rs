//! Crate-wide error type.

/// Errors raised by the library.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested level set is empty.
    #[error("empty set: rho = {rho} is below the optimal rate {rho_star}")]
    EmptySet { rho: f64, rho_star: f64 },
    /// The function class has mu = L, which the operation cannot handle.
    #[error("degenerate function class: mu = L = {0}")]
    DegenerateClass(f64),
    /// A documented precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Division by a zero step-size.
    #[error("division by zero step-size")]
    ZeroStep,
    /// A matrix that must decompose into nonnegative harmonic weights does not.
    #[error("not decomposable: weight {index} = {value}")]
    NotDecomposable { index: usize, value: f64 },
    /// The iteration matrix does not contract.
    #[error("no contraction: spectral radius {0} >= 1")]
    NoContraction(f64),
    /// The linear-program solver stopped without an answer.
    #[error("solver failure after {iterations} pivots: {reason}")]
    Solver { iterations: usize, reason: String },
    /// Reading or writing an output file failed.
    #[error("i/o error: {0}")]
    Io(String),
    /// A construction-time self-test failed.
    #[error("self-test failed: {0}")]
    SelfTest(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Shorthand result type.
pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Parameter-domain variants carry the offending values so that the CLI can
/// name the violated constraint verbatim.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension N = {0} is too small (need N >= 2)")]
    DimensionTooSmall(u32),
    #[error("exponent p = {p} out of range (need 1 < p < N = {n})")]
    PNotInRange { p: f64, n: u32 },
    #[error("weight alpha = {alpha} out of range (need p - N = {lower} < alpha < p + beta = {upper})")]
    AlphaOutOfRange { alpha: f64, lower: f64, upper: f64 },
    #[error("non-finite parameter: {0}")]
    NonFinite(&'static str),
    #[error("classical parameters out of domain: {0}")]
    ClassicalDomain(String),
    #[error("integer overflow evaluating {0}")]
    Overflow(&'static str),
    #[error("singular denominator: {0}")]
    SingularDenominator(&'static str),
    #[error("integral does not converge: {0}")]
    NonIntegrable(String),
    #[error("function vanishes identically on the grid")]
    ZeroFunction,
    #[error("analytic derivative required but not available")]
    DerivativeUnavailable,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("discrete weight is not positive definite at node {0}")]
    IndefiniteWeight(usize),
    #[error("eigensolver failed: {0}")]
    SolverFailure(String),
    #[error("spectral gap not resolved: next eigenvalue {next} is within tolerance of threshold {threshold}")]
    GapNotResolved { next: f64, threshold: f64 },
    #[error("manifold projection did not converge after {restarts} restarts (best distance {best})")]
    NonConvergence { restarts: usize, best: f64 },
    #[error("operation requires {0}")]
    BranchViolation(String),
    #[error("input is not orthogonal to the tangent space: {0}")]
    OrthogonalityViolation(String),
    #[error("base vector x must be nonzero")]
    ZeroBase,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by an invalid (N, p, alpha, beta) tuple.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionTooSmall(_)
                | Error::PNotInRange { .. }
                | Error::AlphaOutOfRange { .. }
                | Error::NonFinite(_)
                | Error::ClassicalDomain(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the solvers, the continuation driver and the exporters.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular jacobian: pivot {pivot:e} at row {row}")]
    SingularJacobian { row: usize, pivot: f64 },

    #[error("singular bordered system")]
    SingularBordered,

    #[error("newton did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("converged solution is not positive (min {min:e})")]
    NonPositive { min: f64 },

    #[error("arclength step failed: {0}")]
    StepFailed(String),

    #[error("ambiguous event between steps {step} and {}", step + 1)]
    AmbiguousEvent { step: usize },

    #[error("ambiguous bump type: interval {interval} peak ratio {ratio:.4} near threshold")]
    AmbiguousType { interval: usize, ratio: f64 },

    #[error("branch switching failed: {0}")]
    SwitchFailed(String),

    #[error("d1 = {0:e} is not zero; second-order direction undefined")]
    D1NonZero(f64),

    #[error("blow-up at t = {t:e} (max |u| = {max:e})")]
    BlowUp { t: f64, max: f64 },

    #[error("no steady state before t = {t:e} (rate {rate:e})")]
    Timeout { t: f64, rate: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

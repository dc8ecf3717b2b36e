use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An eigensolver stopped before every requested pair met its residual bound.
    #[error("{context}: eigensolver did not converge after {iterations} iterations (residuals {residuals:?})")]
    NoConvergence {
        context: String,
        iterations: usize,
        residuals: Vec<f64>,
    },
}

impl Error {
    pub(crate) fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::NoConvergence {
                context,
                iterations,
                residuals,
            } => Error::NoConvergence {
                context: format!("{}: {}", ctx.into(), context),
                iterations,
                residuals,
            },
            other => other,
        }
    }

    /// True for failures of the numerical solvers, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::NoConvergence { .. })
    }
}

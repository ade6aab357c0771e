use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no convergence at t = {at}: {reason}")]
    Convergence { at: f64, reason: String },
    #[error("newton failed after {iters} iterations (residual {residual:.3e})")]
    Newton { iters: usize, residual: f64 },
    #[error("orbit left the physical regime (min u = {min_u})")]
    Physicality { min_u: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

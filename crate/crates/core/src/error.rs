use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set is internally inconsistent (e.g. a schedule that cannot
    /// support the requested analysis window).
    #[error("configuration error: {0}")]
    Config(String),

    /// Adaptive step size collapsed below the representable limit.
    #[error("integration failed at t = {time} us: {reason}")]
    Integration { time: f64, reason: String },

    /// Iterative eigensolver did not reach the requested residual.
    #[error("eigensolver did not converge after {iterations} iterations (max residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Two energies required to be distinct coincide within tolerance.
    #[error("degenerate levels {first} and {second}: |E_a - E_b| = {separation:e}")]
    Degenerate { first: usize, second: usize, separation: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

use thiserror::Error;

use crate::torus::RhoEstimate;

/// Failure modes shared by every computation in the crate.
#[derive(Debug, Error, Clone)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("step size underflow at t = {at}: {detail}")]
    Stiffness { at: f64, detail: String },

    #[error("rotation number not converged after {periods} periods (best {best:?})")]
    Convergence { periods: usize, best: Box<RhoEstimate> },

    #[error("accuracy check failed: {0}")]
    Accuracy(String),

    #[error("backward recursion not converged up to K = {k_max} (last change {delta:e})")]
    Truncation { k_max: usize, delta: f64 },

    #[error("transport refused: carried solution becomes recessive by a factor {factor:e}")]
    Stability { factor: f64 },

    #[error("degenerate canonical frame: {0}")]
    DegenerateFrame(String),

    #[error("inconsistent connection data: {0}")]
    Inconsistency(String),

    #[error("insufficient range: {0}")]
    Range(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidParams(_) | Error::Range(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

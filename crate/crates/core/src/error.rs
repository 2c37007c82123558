//! Crate-wide error type.

/// Errors produced by grid construction, integration, spectral solves and
/// orbit iteration.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Grid parameters outside the supported range (dimension, extents,
    /// node counts).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Kernel parameters outside the supported range (radius vs extents,
    /// empty discrete support).
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    /// A kernel, operator or state was built for a different grid than the
    /// one it is being used with.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Invalid argument outside the other categories (step sizes, sample
    /// counts, field lengths).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A NaN or infinity appeared in a state or coefficient sample.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A state component dropped below the negativity clamp tolerance,
    /// which indicates an unstable step size rather than roundoff.
    #[error("negativity beyond clamp tolerance at t={time}, node {node}: {value} (tolerance {tolerance})")]
    Negativity {
        time: f64,
        node: usize,
        value: f64,
        tolerance: f64,
    },

    /// A hypothesis required by a solver (positive growth spectrum point,
    /// positive forcings, ratio condition, ...) does not hold.
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    /// Power iteration did not reach the requested residual.
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    PowerIteration { iterations: usize, residual: f64 },

    /// A Poincare-map iteration that the theory predicts to be monotone
    /// violated monotonicity beyond slack.
    #[error("monotonicity violation: {0}")]
    Monotonicity(String),

    /// A fixed-point iteration hit its period cap without converging.
    #[error("unresolved after {periods} periods (last successive difference {delta:e})")]
    Unresolved { periods: usize, delta: f64 },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of numerical processes (as opposed to invalid
    /// inputs); used by callers to pick exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::Negativity { .. }
                | Error::PowerIteration { .. }
                | Error::Monotonicity(_)
                | Error::Unresolved { .. }
        )
    }
}

//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong when configuring or running a simulation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter failed validation (non-finite, negative rate, zero coupling, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An initial condition is inconsistent with the system size.
    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    /// A (j, m) label is outside the angular-momentum lattice for N emitters.
    #[error("invalid (j, m) label: {0}")]
    InvalidLabel(String),

    /// The requested Hilbert-space dimension exceeds the solver capacity.
    #[error("dimension {dim} exceeds solver capacity {limit}")]
    DimensionLimit { dim: usize, limit: usize },

    /// The requested operation is not defined for this initial condition.
    #[error("unsupported initial condition: {0}")]
    UnsupportedInitialCondition(String),

    /// The adaptive integrator could not reach the requested accuracy.
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}); tolerances may be too tight")]
    StepSizeUnderflow { t: f64, h: f64 },

    /// The adaptive integrator exceeded its step budget.
    #[error("integrator exceeded {max_steps} steps before t_end")]
    StepBudgetExceeded { max_steps: u64 },

    /// An eigensolver failed to converge.
    #[error("eigensolver did not converge after {sweeps} sweeps (off-norm {off:.3e})")]
    EigenNoConvergence { sweeps: usize, off: f64 },

    /// A matrix had the wrong shape for the requested operation.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Integer overflow in a combinatorial quantity.
    #[error("combinatorial overflow: {0}")]
    CombinatorialOverflow(String),

    /// A sweep could not locate the feature it was asked to find.
    #[error("sweep failed: {0}")]
    SweepFailed(String),

    /// An internal cross-check failed; indicates a bug, not bad input.
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

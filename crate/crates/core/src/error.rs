//! Error type shared by all modules of the crate.

use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by measure construction, transform evaluation, flows,
/// kernels, and the matrix model.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("atom or density value is negative (value {0})")]
    NegativeMass(f64),
    #[error("measure has no atoms and no density")]
    EmptyMeasure,
    #[error("moment order {0} exceeds the supported maximum {1}")]
    OrderTooHigh(usize, usize),
    #[error("test function domain [{f_lo}, {f_hi}] does not cover the support [{lo}, {hi}]")]
    DomainMismatch { f_lo: f64, f_hi: f64, lo: f64, hi: f64 },
    #[error("operation requires a probability measure (total mass {0})")]
    NotProbability(f64),
    #[error("evaluation point {0} is not in the open upper half-plane")]
    LowerHalfPlane(Complex64),
    #[error("evaluator undefined at this point: {0}")]
    EvaluatorUndefined(String),
    #[error("recovered mass {0} is outside [0.999, 1.001]; widen the inversion grid")]
    MassDeficit(f64),
    #[error("clipping negative density removed {0:.3e} mass (cap 1e-4)")]
    NegativeDensityExcess(f64),
    #[error("mixture would need {0} components (budget {1})")]
    NodeBudgetExceeded(usize, usize),
    #[error("step control failed at s = {s_reached} (last point {last}); tolerance unattainable")]
    StepFailure { s_reached: f64, last: Complex64 },
    #[error("point left the flow domain at s = {0} (imaginary part below floor)")]
    OutsideDomain(f64),
    #[error("test function does not provide the required derivative (order {0})")]
    DerivativeUnavailable(u8),
    #[error("contour radius too small: |m0 - 1| = {0:.3e}")]
    RadiusTooSmall(f64),
    #[error("orthogonal-polynomial recursion lost positivity at step {0}")]
    MomentBreakdown(usize),
    #[error("compressed operator is not in the factor-1 algebra (off-block norm {0:.3e})")]
    NotCompressible(f64),
    #[error("resolvent is singular at z = {0}")]
    SingularResolvent(Complex64),
    #[error("no trace-failure witness found (factor-2 state appears multiplicative)")]
    NoWitnessFound,
    #[error("total model dimension {0} exceeds the cap {1}")]
    DimensionCap(usize, usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by malformed input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NegativeMass(_)
                | Error::EmptyMeasure
                | Error::OrderTooHigh(..)
                | Error::DomainMismatch { .. }
                | Error::NotProbability(_)
                | Error::DerivativeUnavailable(_)
                | Error::DimensionCap(..)
                | Error::Invalid(_)
        )
    }
}

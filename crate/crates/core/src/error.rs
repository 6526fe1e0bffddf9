//! Error taxonomy shared by all modules.

use thiserror::Error;

/// Everything that can go wrong in a numeric operation of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Lambert W argument below the principal-branch point -1/e (beyond slack).
    #[error("branch point violation: x = {x:.17e} is below -1/e by {excess:.3e}")]
    BranchPointViolation { x: f64, excess: f64 },

    /// Adaptive quadrature could not meet the requested tolerance.
    #[error("quadrature failure: error estimate {estimate:.3e} above tolerance {tolerance:.3e} after {subdivisions} subdivisions")]
    QuadratureFailure {
        estimate: f64,
        tolerance: f64,
        subdivisions: usize,
    },

    /// Evaluation outside a table-backed scale model's grid.
    #[error("out of range: t = {t} outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    /// A scale model violating the admissibility requirements.
    #[error("non-admissible scale model: {reason}")]
    NonAdmissible { reason: String },

    /// Integral over the unbounded scale range does not converge.
    #[error("divergent integral: {what}")]
    DivergentIntegral { what: String },

    /// tau_k -> infinity because beta >= beta_k with the cutoff removed.
    #[error("threshold divergence: beta = {beta:.12e} >= beta_k = {threshold:.12e} with t0 = -inf")]
    ThresholdDivergence { beta: f64, threshold: f64 },

    /// Characteristic envelope crossed: e*z*tau beyond the branch point.
    #[error("envelope crossed: e*z*tau = {ez_tau:.12e} >= 1")]
    EnvelopeCrossed { ez_tau: f64 },

    /// Richardson estimate of the fixed-step integrator above tolerance.
    #[error("step size too coarse: Richardson estimate {estimate:.3e} above tolerance {tolerance:.3e}")]
    StepSizeTooCoarse { estimate: f64, tolerance: f64 },

    /// A flow coefficient exceeded the divergence cap.
    #[error("overflow: C_{n} = {value:.3e} exceeded cap {cap:.3e} at t = {t:.6}")]
    Overflow { n: usize, value: f64, cap: f64, t: f64 },

    /// The oracle flow needs an improved stability constant it was not given.
    #[error("missing delta_{n} for the oracle flow")]
    MissingDelta { n: usize },

    /// Coefficient tables on different grids cannot be compared.
    #[error("grid mismatch: {reason}")]
    GridMismatch { reason: String },

    /// Not enough samples (or wrong regime) for the collapse-exponent fit.
    #[error("insufficient data: {reason}")]
    InsufficientData { reason: String },

    /// Particle number outside the supported bruteforce window.
    #[error("size limit: n = {n} not in [{min}, {max}]")]
    SizeLimit { n: usize, min: usize, max: usize },

    /// Sequence-algebra operands of different particle number.
    #[error("size mismatch: n = {left} vs n = {right}")]
    SizeMismatch { left: usize, right: usize },

    /// Exp/Ln input with the wrong empty-set value.
    #[error("wrong affine space: empty-set value {value} (expected {expected})")]
    WrongAffineSpace { value: f64, expected: f64 },

    /// Multistart minimization: the two best restarts disagree.
    #[error("no convergence: best restarts differ by {spread:.3e} (limit {limit:.3e})")]
    NoConvergence { spread: f64, limit: f64 },

    /// Malformed input to an operation.
    #[error("invalid input: {reason}")]
    InvalidInput { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

/// Errors raised across law construction, series solving, closed-form
/// analysis, enumeration and simulation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Coefficients are negative or do not sum to one.
    #[error("not a probability law: {0}")]
    NonProbability(String),

    /// The law puts all its mass on {0, 1}, so every car parks on arrival.
    #[error("trivial law: mu_0 + mu_1 = 1")]
    TrivialLaw,

    /// Family parameter outside its domain.
    #[error("bad parameter: {0}")]
    BadParam(String),

    /// Evaluation point lies beyond the radius of convergence.
    #[error("t = {t} is beyond the radius of convergence {radius}")]
    BeyondRadius { t: f64, radius: f64 },

    /// The requested derivative is infinite at the radius.
    #[error("derivative of order {order} diverges at the radius {radius}")]
    DivergesAtRadius { order: u8, radius: f64 },

    /// A needed derivative of G is infinite at the radius, so the dense-phase
    /// criterion value is undefined.
    #[error("dense phase with divergent derivative at the radius; phase undetermined")]
    DivergentAtRadius,

    /// Rational coefficients exceeded the configured size limit.
    #[error("rational coefficient exceeded {limit_bits} bits at x-degree {degree}")]
    Overflow { degree: usize, limit_bits: usize },

    /// Invalid truncation order.
    #[error("bad truncation: {0}")]
    BadTruncation(String),

    /// Evaluation point within 1% of the estimated radius; the geometric
    /// tail bound is unreliable there.
    #[error("x = {x} is within 1% of the estimated radius {radius}")]
    NearRadius { x: f64, radius: f64 },

    /// The (law, q) pair is not in the subcritical phase.
    #[error("not subcritical: {0}")]
    NotSubcritical(String),

    /// Parametrization argument beyond the threshold t_c.
    #[error("Y = {y} is beyond the threshold t_c = {t_c}")]
    BeyondThreshold { y: f64, t_c: f64 },

    /// Radicand of the parametrized square root is negative beyond tolerance.
    #[error("negative radicand {0} in the F(x,1) parametrization")]
    NegativeRadicand(f64),

    /// Enumeration size beyond the desk-scale cap.
    #[error("too large: {0}")]
    TooLarge(String),

    /// Mass escaping beyond the cutoff exceeds tolerance in a subcritical run.
    #[error("cutoff too small: {escaped:.3e} mass beyond cutoff {cutoff}")]
    CutoffTooSmall { cutoff: usize, escaped: f64 },

    /// No admissible stable law found for the requested parameters.
    #[error("infeasible stable-law search: {0}")]
    Infeasible(String),

    /// Fit range too short for a meaningful exponent estimate.
    #[error("insufficient range: need n_max - n_min >= 100, got {0}")]
    InsufficientRange(usize),

    /// IO or format error surfaced from file handling.
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

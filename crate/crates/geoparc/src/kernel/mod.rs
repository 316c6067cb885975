//! Closed-form analysis of the parking phase transition.
//!
//! Everything here rests on the discriminant
//!
//! ```text
//! D(t) = (G(t) - t G'(t))^2 - 2 t^2 G(t) G''(t)
//! ```
//!
//! whose first zero `t_c` (or the radius of `G` when there is none — the
//! dense phase) controls the transition: with `phi(y) = (y+1)G(y) -
//! y(y-1)G'(y)`, the parking process on a geometric(q) supercritical tree is
//! subcritical if and only if
//!
//! ```text
//! t_c > 1   and   t_c G(t_c) / phi(t_c)^2 <= q(1-q),
//! ```
//!
//! boundary included. The same discriminant governs the kernel
//! parametrization of the fully-parked-tree series: along
//! `x = x_hat(Y) = Y G(Y) / (G(Y) + Y G'(Y))^2` the value `F(x_hat(Y), 1)`
//! has a two-branch closed form, `d x_hat / dY` is proportional to `D(Y)`,
//! so `x_hat` increases up to the radius `x_hat(t_c)` of `F(., 1)` and the
//! branches meet where the radicand `1 - 4 Y G(Y)/phi(Y)^2` vanishes.
//!
//! The subcritical fixed point `p_o = P(X = 0)` solves
//! `(1 - qp)/q * F(q(1-q)/(1-qp)^2, 1) + p = 1`, an increasing function of
//! `p`, and doubles as the anchor of the exact flux law. Bisection is used
//! throughout: every target function is monotone or sign-bracketed on its
//! domain, and the radicand degenerates at `Y = 1` and `Y = t_c` where
//! Newton steps misbehave.

mod rde;
mod stable;

pub use rde::{iterate_rde, RdeResult};
pub use stable::{construct_stable_law, tail_exponent_fit, StableConstruction, TailFit};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::{ArrivalLaw, OffspringParam};

/// Number of scan points for the first sign change of the discriminant.
const TC_SCAN_POINTS: usize = 4096;
/// Relative tolerance of the threshold bisection.
const TC_REL_TOL: f64 = 1e-12;
/// Roundoff clamp for the parametrization radicand.
const RADICAND_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// The discriminant vanishes at `t_c` (possibly exactly at the radius).
    Root,
    /// No zero inside the radius; the criterion is evaluated at the radius.
    Dense,
}

/// Location `t_c` of the discriminant zero, or the radius in the dense case.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Threshold {
    pub t_c: f64,
    pub kind: ThresholdKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Subcritical,
    Supercritical,
}

/// Verdict of the phase criterion for one `(law, q)` pair.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    pub threshold: Threshold,
    /// `t_c G(t_c) / phi(t_c)^2`.
    pub criterion_value: f64,
    /// `q (1 - q)`.
    pub q_threshold_value: f64,
    pub phase: Phase,
    /// Set when `q(1-q)` equals the criterion value to within 1e-12; such
    /// pairs are classified subcritical (the inequality is inclusive).
    pub boundary: bool,
    /// Critical offspring parameter for this law, when one exists in [1/2, 1).
    pub q_c: Option<f64>,
}

/// Subcritical fixed point `p_o` with its Boltzmann argument.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixedPoint {
    /// `P(X = 0)`.
    pub p_circ: f64,
    /// `x_o = q(1-q)/(1 - q p_circ)^2`.
    pub x_circ: f64,
    /// Residual of the characteristic equation at the returned point.
    pub residual: f64,
}

/// `(G - tG')^2 - 2 t^2 G G''`.
pub fn discriminant(law: &ArrivalLaw, t: f64) -> Result<f64> {
    let g = law.eval_g(t, 0)?;
    let g1 = law.eval_g(t, 1)?;
    let g2 = law.eval_g(t, 2)?;
    Ok((g - t * g1).powi(2) - 2.0 * t * t * g * g2)
}

/// `phi(y) = (y+1) G(y) - y (y-1) G'(y)`.
pub fn phi(law: &ArrivalLaw, y: f64) -> Result<f64> {
    let g = law.eval_g(y, 0)?;
    let g1 = law.eval_g(y, 1)?;
    Ok((y + 1.0) * g - y * (y - 1.0) * g1)
}

/// First zero of the discriminant on `(0, rho)`, by geometric-grid scan and
/// bisection; the radius itself when the discriminant stays positive.
pub fn find_tc(law: &ArrivalLaw) -> Result<Threshold> {
    let rho = law.radius();
    let scan_hi = if rho.is_finite() {
        rho * (1.0 - 1e-9)
    } else {
        // Entire generating functions: grow the window until the
        // discriminant goes negative (it does for every polynomial or
        // Poisson-type law once t^2 G G'' dominates).
        let mut hi = 8.0;
        while discriminant(law, hi)? > 0.0 {
            hi *= 2.0;
            if hi > 1e9 {
                return Err(Error::DivergentAtRadius);
            }
        }
        hi
    };
    let lo = 1e-6f64;
    let ratio = (scan_hi / lo).powf(1.0 / (TC_SCAN_POINTS - 1) as f64);
    let mut prev = lo;
    let mut d_prev = discriminant(law, prev)?;
    let mut t = lo;
    for _ in 1..TC_SCAN_POINTS {
        t *= ratio;
        let d = discriminant(law, t.min(scan_hi))?;
        if d_prev > 0.0 && d <= 0.0 {
            let t_c = bisect_sign_change(|u| discriminant(law, u), prev, t.min(scan_hi))?;
            return Ok(Threshold { t_c, kind: ThresholdKind::Root });
        }
        prev = t;
        d_prev = d;
    }
    // No sign change inside. Only laws finite at their radius can land here
    // (for the supported families: the stable one).
    if !rho.is_finite() {
        return Err(Error::DivergentAtRadius);
    }
    let g = law.eval_g(rho, 0).map_err(|_| Error::DivergentAtRadius)?;
    let g1 = law.eval_g(rho, 1).map_err(|_| Error::DivergentAtRadius)?;
    let g2 = law.eval_g(rho, 2).map_err(|_| Error::DivergentAtRadius)?;
    let d_rho = (g - rho * g1).powi(2) - 2.0 * rho * rho * g * g2;
    let scale = (g - rho * g1).powi(2).max(2.0 * rho * rho * g * g2).max(1.0);
    if d_rho.abs() <= 1e-8 * scale {
        // Critical at the radius: the zero is attained exactly there.
        Ok(Threshold { t_c: rho, kind: ThresholdKind::Root })
    } else {
        Ok(Threshold { t_c: rho, kind: ThresholdKind::Dense })
    }
}

fn bisect_sign_change(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let f_lo = f(lo)?;
    debug_assert!(f_lo > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= TC_REL_TOL * mid {
            return Ok(mid);
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Threshold-aware analysis of one law: the parametrization, criterion and
/// fixed point all need `t_c`, so compute it once.
#[derive(Debug, Clone)]
pub struct Kernel<'a> {
    law: &'a ArrivalLaw,
    threshold: Threshold,
}

impl<'a> Kernel<'a> {
    pub fn new(law: &'a ArrivalLaw) -> Result<Self> {
        let threshold = find_tc(law)?;
        Ok(Kernel { law, threshold })
    }

    pub fn law(&self) -> &ArrivalLaw {
        self.law
    }

    pub fn threshold(&self) -> Threshold {
        self.threshold
    }

    /// `t_c G(t_c) / phi(t_c)^2`.
    pub fn criterion_value(&self) -> Result<f64> {
        let t_c = self.threshold.t_c;
        let g = self.law.eval_g(t_c, 0)?;
        let p = phi(self.law, t_c)?;
        Ok(t_c * g / (p * p))
    }

    /// Apply the phase criterion at offspring parameter `q`.
    pub fn classify(&self, q: OffspringParam) -> Result<PhaseReport> {
        let criterion_value = self.criterion_value()?;
        let t_c = self.threshold.t_c;
        let q_threshold_value = q.q() * (1.0 - q.q());
        let boundary = (criterion_value - q_threshold_value).abs() <= 1e-12;
        let subcritical = t_c > 1.0 && (criterion_value <= q_threshold_value || boundary);
        let q_c = if t_c > 1.0 && criterion_value <= 0.25 + RADICAND_CLAMP {
            let radicand = (1.0 - 4.0 * criterion_value).max(0.0);
            Some(0.5 * (1.0 + radicand.sqrt()))
        } else {
            None
        };
        Ok(PhaseReport {
            threshold: self.threshold,
            criterion_value,
            q_threshold_value,
            phase: if subcritical { Phase::Subcritical } else { Phase::Supercritical },
            boundary,
            q_c,
        })
    }

    /// `x_hat(Y) = Y G(Y) / (G(Y) + Y G'(Y))^2`, nondecreasing on [0, t_c].
    pub fn x_hat(&self, y: f64) -> Result<f64> {
        let t_c = self.threshold.t_c;
        if y > t_c * (1.0 + 1e-12) {
            return Err(Error::BeyondThreshold { y, t_c });
        }
        let y = y.min(t_c);
        let g = self.law.eval_g(y, 0)?;
        let g1 = self.law.eval_g(y, 1)?;
        Ok(y * g / (g + y * g1).powi(2))
    }

    /// Radius of convergence of `x -> F(x, 1)`, namely `x_hat(t_c)`.
    pub fn radius_of_f(&self) -> Result<f64> {
        self.x_hat(self.threshold.t_c)
    }

    /// `F(x_hat(Y), 1)` by the two-branch closed form; the branches meet at
    /// `Y = 1` where the radicand vanishes.
    pub fn f_at_one(&self, y: f64) -> Result<f64> {
        let t_c = self.threshold.t_c;
        if y > t_c * (1.0 + 1e-12) {
            return Err(Error::BeyondThreshold { y, t_c });
        }
        let y = y.min(t_c);
        if y == 0.0 {
            return Ok(0.0);
        }
        let g = self.law.eval_g(y, 0)?;
        let g1 = self.law.eval_g(y, 1)?;
        let p = (y + 1.0) * g - y * (y - 1.0) * g1;
        let radicand = 1.0 - 4.0 * y * g / (p * p);
        if radicand < -RADICAND_CLAMP {
            return Err(Error::NegativeRadicand(radicand));
        }
        let root = radicand.max(0.0).sqrt();
        let signed = if y <= 1.0 { -root } else { root };
        Ok(1.0 + p / (2.0 * (g + y * g1)) * (signed - 1.0))
    }

    /// `F(x_hat(Y), 0) = 1 - G(0) G(Y) / (G(Y)^2 - Y^2 G'(Y)^2)`.
    ///
    /// This is the elimination of `F(x, Y)` from the kernel relations
    /// `G(Y)/(1-F)^2 = Y/x` and `G'(Y)/(1-F) = F/x`; it is validated
    /// coefficient by coefficient against the enumeration oracle.
    pub fn f_at_zero(&self, y: f64) -> Result<f64> {
        let t_c = self.threshold.t_c;
        if y > t_c * (1.0 + 1e-12) {
            return Err(Error::BeyondThreshold { y, t_c });
        }
        let y = y.min(t_c);
        let g0 = self.law.eval_g(0.0, 0)?;
        let g = self.law.eval_g(y, 0)?;
        let g1 = self.law.eval_g(y, 1)?;
        Ok(1.0 - g0 * g / (g * g - y * y * g1 * g1))
    }

    /// Invert the parametrization: the `Y` in [0, t_c] with `x_hat(Y) = x`.
    pub fn invert_x_hat(&self, x: f64) -> Result<f64> {
        let t_c = self.threshold.t_c;
        let x_max = self.x_hat(t_c)?;
        if !(0.0..=x_max * (1.0 + 1e-12)).contains(&x) {
            return Err(Error::BadParam(format!("x = {x} outside [0, {x_max}]")));
        }
        let (mut lo, mut hi) = (0.0f64, t_c);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.x_hat(mid)? < x {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * t_c {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `F(x, 1)` for `x` up to the radius, through the parametrization.
    pub fn f_of_x_at_one(&self, x: f64) -> Result<f64> {
        self.f_at_one(self.invert_x_hat(x)?)
    }

    /// Left-hand side of the characteristic equation minus one:
    /// `(1-qp)/q * F(x(p), 1) + p - 1`, increasing in `p`.
    fn characteristic(&self, q: f64, p: f64) -> Result<f64> {
        let x = q * (1.0 - q) / (1.0 - q * p).powi(2);
        Ok((1.0 - q * p) / q * self.f_of_x_at_one(x)? + p - 1.0)
    }

    /// Positive solution `p_o` of the characteristic equation, when the pair
    /// is subcritical; `None` otherwise.
    pub fn solve_p_circ(&self, q: OffspringParam) -> Result<Option<FixedPoint>> {
        let qv = q.q();
        let x_rad = self.radius_of_f()?;
        // Largest feasible p: x(p) is increasing in p and F is only defined
        // up to its radius.
        let x_at = |p: f64| qv * (1.0 - qv) / (1.0 - qv * p).powi(2);
        let p_max = if x_at(1.0) <= x_rad {
            1.0
        } else {
            let s = (qv * (1.0 - qv) / x_rad).sqrt();
            (1.0 - s) / qv
        };
        if p_max <= 0.0 {
            return Ok(None);
        }
        let h_max = self.characteristic(qv, p_max)?;
        if h_max < -1e-11 {
            // Even the largest feasible p cannot close the equation: the
            // flux survives, the pair is supercritical.
            return Ok(None);
        }
        if self.characteristic(qv, 0.0)? >= 0.0 {
            return Ok(None);
        }
        if h_max <= 0.0 {
            // Boundary case: the root sits at the feasibility edge.
            let residual = h_max.abs();
            return Ok(Some(FixedPoint { p_circ: p_max, x_circ: x_at(p_max), residual }));
        }
        let (mut lo, mut hi) = (0.0f64, p_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.characteristic(qv, mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 {
                break;
            }
        }
        let p_circ = 0.5 * (lo + hi);
        let residual = self.characteristic(qv, p_circ)?.abs();
        Ok(Some(FixedPoint { p_circ, x_circ: x_at(p_circ), residual }))
    }
}

/// One-shot phase classification.
pub fn classify(law: &ArrivalLaw, q: OffspringParam) -> Result<PhaseReport> {
    Kernel::new(law)?.classify(q)
}

/// One-shot fixed-point solve.
pub fn solve_p_circ(law: &ArrivalLaw, q: OffspringParam) -> Result<Option<FixedPoint>> {
    Kernel::new(law)?.solve_p_circ(q)
}

/// Critical curves of the three named families in closed form, used as an
/// independent check of the generic pipeline.
pub mod closed_forms {
    /// Geometric arrivals with mean `alpha`.
    pub mod geometric {
        pub fn t_c(alpha: f64) -> f64 {
            (1.0 + alpha) / (4.0 * alpha)
        }
        pub fn criterion(alpha: f64) -> f64 {
            27.0 * alpha * (1.0 + alpha).powi(2) / (4.0 * (1.0 + 9.0 * alpha).powi(2))
        }
        pub fn q_c(alpha: f64) -> Option<f64> {
            (alpha <= 1.0 / 3.0)
                .then(|| 0.5 * (1.0 + (1.0 - 3.0 * alpha).powf(1.5) / (1.0 + 9.0 * alpha)))
        }
    }

    /// Binary arrivals: two cars with probability `alpha/2`.
    pub mod binary {
        pub fn t_c(alpha: f64) -> f64 {
            let k = 2.0 / 3.0f64.sqrt() - 1.0;
            (k * (2.0 - alpha) / alpha).sqrt()
        }
        pub fn q_c(alpha: f64) -> Option<f64> {
            if alpha > 2.0 - 3.0f64.sqrt() {
                return None;
            }
            let s3 = 3.0f64.sqrt();
            let w = ((2.0 - alpha) / alpha).sqrt();
            let four_crit = 6.0 * (2.0 * s3 + 3.0).sqrt()
                / ((alpha * (2.0 - alpha)).sqrt() * (3.0 + (2.0 * s3 - 3.0).sqrt() * w).powi(2));
            Some(0.5 * (1.0 + (1.0 - four_crit).max(0.0).sqrt()))
        }
    }

    /// Poisson arrivals with mean `alpha`.
    pub mod poisson {
        pub fn t_c(alpha: f64) -> f64 {
            (2.0f64.sqrt() - 1.0) / alpha
        }
        pub fn q_c(alpha: f64) -> Option<f64> {
            let s2 = 2.0f64.sqrt();
            if alpha > s2 - 1.0 {
                return None;
            }
            let four_crit = 2.0 * (s2 - 1.0) * alpha * (alpha - (s2 - 1.0)).exp()
                / (alpha + 3.0 - 2.0 * s2).powi(2);
            Some(0.5 * (1.0 + (1.0 - four_crit).max(0.0).sqrt()))
        }
    }
}

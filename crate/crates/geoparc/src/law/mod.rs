//! Car-arrival laws and their generating functions.
//!
//! An [`ArrivalLaw`] is a probability distribution `mu` on the nonnegative
//! integers with generating function `G(t) = sum mu_k t^k`, radius of
//! convergence `rho > 1`, and the non-triviality condition
//! `mu_0 + mu_1 < 1` (otherwise every car parks on its arrival spot and
//! nothing ever moves).
//!
//! Five families are supported:
//! - `binary(alpha)`: two cars with probability `alpha/2`, none otherwise;
//!   `G(t) = 1 - alpha/2 + (alpha/2) t^2`.
//! - `geometric(alpha)`: geometric with mean `alpha = p/(1-p)`;
//!   `G(t) = 1/(1 + alpha - alpha t)`.
//! - `poisson(alpha)`: Poisson with mean `alpha`; `G(t) = exp(alpha(t-1))`.
//! - `custom`: a finite coefficient list.
//! - `stable(P, C, rho, alpha_s)`: non-generic laws with
//!   `G(t) = P(t) + C (1 - t/rho)^{alpha_s}`, `C < 0`, `alpha_s` in (2,3).
//!
//! Binary, geometric and custom laws also carry exact rational coefficients
//! (parameters given as floats are converted to their exact dyadic value),
//! which the series engine and the enumeration oracle share so that their
//! outputs can be compared bit for bit.

mod sampler;
mod spec_file;

pub use sampler::CdfTable;
pub use spec_file::{law_from_json, law_from_json_str};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{rational_is_negative, snap_to_rational};

/// Offspring parameter `q` of the geometric reproduction law of the tree,
/// strictly inside (1/2, 1) so the tree is supercritical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffspringParam(f64);

impl OffspringParam {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.5 && q < 1.0) {
            return Err(Error::BadParam(format!(
                "offspring parameter q must lie strictly in (1/2, 1), got {q}"
            )));
        }
        Ok(OffspringParam(q))
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.0
    }

    /// Mean offspring `q/(1-q) > 1`.
    pub fn mean(&self) -> f64 {
        self.0 / (1.0 - self.0)
    }

    /// Extinction probability `(1-q)/q` of the tree.
    pub fn extinction_probability(&self) -> f64 {
        (1.0 - self.0) / self.0
    }
}

/// Family tag with its resolved parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Binary { alpha: f64 },
    Geometric { alpha: f64 },
    Poisson { alpha: f64 },
    Custom { coeffs: Vec<f64> },
    Stable { p: Vec<f64>, c: f64, rho: f64, alpha_s: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Binary { .. } => "binary",
            Family::Geometric { .. } => "geometric",
            Family::Poisson { .. } => "poisson",
            Family::Custom { .. } => "custom",
            Family::Stable { .. } => "stable",
        }
    }
}

/// Exact coefficient source for rational-capable families.
#[derive(Debug, Clone)]
enum RationalCoeffs {
    /// mu_0 = 1 - alpha/2, mu_2 = alpha/2.
    Binary { mu0: BigRational, mu2: BigRational },
    /// mu_k = (1-p) p^k.
    Geometric { p: BigRational },
    Custom { coeffs: Vec<BigRational> },
}

/// A validated car-arrival law.
#[derive(Debug, Clone)]
pub struct ArrivalLaw {
    family: Family,
    radius: f64,
    mean: f64,
    variance: f64,
    rational: Option<RationalCoeffs>,
    sampler: sampler::ArrivalSampler,
}

/// Tolerance for probability-mass validation of float-mode laws.
const MASS_TOL: f64 = 1e-12;

impl ArrivalLaw {
    /// Binary arrivals: two cars w.p. `alpha/2`, none otherwise.
    pub fn binary(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
            return Err(Error::BadParam(format!("binary alpha must be in [0,1], got {alpha}")));
        }
        let half = snap_to_rational(alpha).expect("finite") / BigRational::from_integer(2.into());
        Self::binary_exact(half)
    }

    /// Binary arrivals from the exact value of `alpha/2`.
    pub fn binary_exact(half_alpha: BigRational) -> Result<Self> {
        let one = BigRational::one();
        if rational_is_negative(&half_alpha) || half_alpha > BigRational::new(1.into(), 2.into()) {
            return Err(Error::BadParam("binary alpha must be in [0,1]".into()));
        }
        if half_alpha.is_zero() {
            return Err(Error::TrivialLaw);
        }
        let mu0 = &one - &half_alpha;
        let alpha = 2.0 * half_alpha.to_f64_lossy();
        let mean = alpha;
        let variance = 2.0 * alpha - alpha * alpha;
        let coeffs = vec![mu0.to_f64_lossy(), 0.0, half_alpha.to_f64_lossy()];
        Ok(ArrivalLaw {
            family: Family::Binary { alpha },
            radius: f64::INFINITY,
            mean,
            variance,
            rational: Some(RationalCoeffs::Binary { mu0, mu2: half_alpha }),
            sampler: sampler::ArrivalSampler::table(&coeffs),
        })
    }

    /// Geometric arrivals with mean `alpha`, i.e. success parameter
    /// `p = alpha/(1+alpha)`.
    pub fn geometric(alpha: f64) -> Result<Self> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(Error::BadParam(format!("geometric alpha must be > 0, got {alpha}")));
        }
        let a = snap_to_rational(alpha).expect("finite");
        let p = &a / (BigRational::one() + &a);
        Self::geometric_from_p(p)
    }

    /// Geometric arrivals from the exact value of `p`, `mu_k = (1-p) p^k`.
    pub fn geometric_from_p(p: BigRational) -> Result<Self> {
        let one = BigRational::one();
        if !(p > BigRational::zero() && p < one) {
            return Err(Error::BadParam("geometric p must be in (0,1)".into()));
        }
        let pf = p.to_f64_lossy();
        let alpha = (&p / (BigRational::one() - &p)).to_f64_lossy();
        let radius = p.recip().to_f64_lossy();
        Ok(ArrivalLaw {
            family: Family::Geometric { alpha },
            radius,
            mean: alpha,
            variance: alpha * (1.0 + alpha),
            rational: Some(RationalCoeffs::Geometric { p }),
            sampler: sampler::ArrivalSampler::Geometric { p: pf },
        })
    }

    /// Poisson arrivals with mean `alpha`.
    pub fn poisson(alpha: f64) -> Result<Self> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(Error::BadParam(format!("poisson alpha must be > 0, got {alpha}")));
        }
        Ok(ArrivalLaw {
            family: Family::Poisson { alpha },
            radius: f64::INFINITY,
            mean: alpha,
            variance: alpha,
            rational: None,
            sampler: sampler::ArrivalSampler::Poisson { exp_neg_alpha: (-alpha).exp() },
        })
    }

    /// Finite-support law from a float coefficient list.
    pub fn custom(coeffs: &[f64]) -> Result<Self> {
        let rats: Option<Vec<BigRational>> = coeffs.iter().map(|&c| snap_to_rational(c)).collect();
        let rats = rats.ok_or_else(|| Error::NonProbability("non-finite coefficient".into()))?;
        Self::custom_exact(rats)
    }

    /// Finite-support law from exact rational coefficients. The list is
    /// normalized by its sum, which must be within 1e-12 of one.
    pub fn custom_exact(mut coeffs: Vec<BigRational>) -> Result<Self> {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::NonProbability("empty coefficient list".into()));
        }
        if coeffs.iter().any(rational_is_negative) {
            return Err(Error::NonProbability("negative coefficient".into()));
        }
        let sum: BigRational = coeffs.iter().sum();
        let sum_f = sum.to_f64_lossy();
        if (sum_f - 1.0).abs() > MASS_TOL {
            return Err(Error::NonProbability(format!("coefficients sum to {sum_f}, not 1")));
        }
        if coeffs.len() <= 2 {
            return Err(Error::TrivialLaw);
        }
        let coeffs: Vec<BigRational> = coeffs.iter().map(|c| c / &sum).collect();
        let floats: Vec<f64> = coeffs.iter().map(|c| c.to_f64_lossy()).collect();
        let mean: f64 = floats.iter().enumerate().map(|(k, c)| k as f64 * c).sum();
        let second: f64 = floats.iter().enumerate().map(|(k, c)| (k * k) as f64 * c).sum();
        Ok(ArrivalLaw {
            family: Family::Custom { coeffs: floats.clone() },
            radius: f64::INFINITY,
            mean,
            variance: second - mean * mean,
            rational: Some(RationalCoeffs::Custom { coeffs }),
            sampler: sampler::ArrivalSampler::table(&floats),
        })
    }

    /// Non-generic law `G(t) = P(t) + C (1 - t/rho)^{alpha_s}`.
    ///
    /// All coefficients are checked numerically up to the sampler truncation
    /// point; for a quadratic `P` the tail `k >= 3` is nonnegative whenever
    /// `C < 0`, so the check mostly guards the low-order terms.
    pub fn stable(p: Vec<f64>, c: f64, rho: f64, alpha_s: f64) -> Result<Self> {
        if c >= 0.0 || c.is_nan() {
            return Err(Error::BadParam(format!("stable C must be negative, got {c}")));
        }
        if rho <= 1.0 || !rho.is_finite() {
            return Err(Error::BadParam(format!("stable rho must be > 1, got {rho}")));
        }
        if !(alpha_s > 2.0 && alpha_s < 3.0) {
            return Err(Error::BadParam(format!("stable exponent must be in (2,3), got {alpha_s}")));
        }
        let family = Family::Stable { p: p.clone(), c, rho, alpha_s };
        let law_coeffs = stable_coeff_prefix(&p, c, rho, alpha_s, 8);
        if law_coeffs.iter().any(|&m| m < -1e-13) {
            return Err(Error::NonProbability(format!(
                "stable law has a negative low-order coefficient: {law_coeffs:?}"
            )));
        }
        // G(1) = 1 is the normalization.
        let g1: f64 = eval_family(&family, 1.0, 0);
        if (g1 - 1.0).abs() > MASS_TOL {
            return Err(Error::NonProbability(format!("G(1) = {g1}, not 1")));
        }
        let mu0 = law_coeffs[0];
        let mu1 = law_coeffs[1];
        if mu0 + mu1 >= 1.0 - 1e-12 {
            return Err(Error::TrivialLaw);
        }
        let mean = eval_family(&family, 1.0, 1);
        let second_factorial = eval_family(&family, 1.0, 2);
        let variance = second_factorial + mean - mean * mean;
        // Build the sampler table out to cumulative mass 1 - 1e-12, checking
        // nonnegativity along the way.
        let mut table = Vec::new();
        let mut acc = 0.0;
        let mut k = 0usize;
        while acc < 1.0 - 1e-12 && k < 100_000 {
            let m = stable_mu(&p, c, rho, alpha_s, k);
            if m < -1e-13 {
                return Err(Error::NonProbability(format!(
                    "stable law has negative coefficient mu_{k} = {m}"
                )));
            }
            acc += m.max(0.0);
            table.push(m.max(0.0));
            k += 1;
        }
        Ok(ArrivalLaw {
            family,
            radius: rho,
            mean,
            variance,
            rational: None,
            sampler: sampler::ArrivalSampler::table(&table),
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Radius of convergence of `G` (`inf` for entire families).
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `(mean, variance, radius)`.
    pub fn stats(&self) -> (f64, f64, f64) {
        (self.mean, self.variance, self.radius)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Largest possible arrival for bounded-support families.
    pub fn max_arrival(&self) -> Option<usize> {
        match &self.family {
            Family::Binary { .. } => Some(2),
            Family::Custom { coeffs } => Some(coeffs.len() - 1),
            _ => None,
        }
    }

    /// Whether exact rational coefficients are available.
    pub fn is_rational(&self) -> bool {
        self.rational.is_some()
    }

    /// Coefficient `mu_k` as a float.
    pub fn mu(&self, k: usize) -> f64 {
        match &self.family {
            Family::Binary { alpha } => match k {
                0 => 1.0 - alpha / 2.0,
                2 => alpha / 2.0,
                _ => 0.0,
            },
            Family::Geometric { alpha } => {
                let p = alpha / (1.0 + alpha);
                (1.0 - p) * p.powi(k as i32)
            }
            Family::Poisson { alpha } => {
                let mut m = (-alpha).exp();
                for j in 1..=k {
                    m *= alpha / j as f64;
                }
                m
            }
            Family::Custom { coeffs } => coeffs.get(k).copied().unwrap_or(0.0),
            Family::Stable { p, c, rho, alpha_s } => stable_mu(p, *c, *rho, *alpha_s, k),
        }
    }

    /// The prefix `mu_0 .. mu_{count-1}` as floats.
    pub fn coeff_prefix(&self, count: usize) -> Vec<f64> {
        match &self.family {
            Family::Stable { p, c, rho, alpha_s } => {
                stable_coeff_prefix(p, *c, *rho, *alpha_s, count)
            }
            Family::Poisson { alpha } => {
                let mut out = Vec::with_capacity(count);
                let mut m = (-alpha).exp();
                for k in 0..count {
                    if k > 0 {
                        m *= alpha / k as f64;
                    }
                    out.push(m);
                }
                out
            }
            _ => (0..count).map(|k| self.mu(k)).collect(),
        }
    }

    /// Coefficient `mu_k` as an exact rational, when the family permits.
    pub fn mu_rational(&self, k: usize) -> Option<BigRational> {
        let r = self.rational.as_ref()?;
        Some(match r {
            RationalCoeffs::Binary { mu0, mu2 } => match k {
                0 => mu0.clone(),
                2 => mu2.clone(),
                _ => BigRational::zero(),
            },
            RationalCoeffs::Geometric { p } => {
                let mut v = BigRational::one() - p;
                for _ in 0..k {
                    v *= p;
                }
                v
            }
            RationalCoeffs::Custom { coeffs } => {
                coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
            }
        })
    }

    /// The prefix `mu_0 .. mu_{count-1}` as exact rationals.
    pub fn rational_prefix(&self, count: usize) -> Option<Vec<BigRational>> {
        let r = self.rational.as_ref()?;
        Some(match r {
            RationalCoeffs::Geometric { p } => {
                let mut out = Vec::with_capacity(count);
                let mut v = BigRational::one() - p;
                for _ in 0..count {
                    out.push(v.clone());
                    v *= p;
                }
                out
            }
            _ => (0..count).map(|k| self.mu_rational(k).unwrap()).collect(),
        })
    }

    /// Evaluate `G`, `G'` or `G''` at `t >= 0` by the family closed form.
    pub fn eval_g(&self, t: f64, order: u8) -> Result<f64> {
        assert!(order <= 2, "only orders 0, 1, 2 are supported");
        if t < 0.0 || t.is_nan() {
            return Err(Error::BadParam(format!("t must be >= 0, got {t}")));
        }
        if t > self.radius {
            return Err(Error::BeyondRadius { t, radius: self.radius });
        }
        if t == self.radius {
            // Among the supported families only the stable one has finite
            // values at its radius (all orders up to 2).
            if !matches!(self.family, Family::Stable { .. }) {
                return Err(Error::DivergesAtRadius { order, radius: self.radius });
            }
        }
        Ok(eval_family(&self.family, t, order))
    }

    /// Draw one arrival.
    pub fn sample_arrival<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sampler.sample(rng)
    }
}

fn eval_family(family: &Family, t: f64, order: u8) -> f64 {
    match family {
        Family::Binary { alpha } => match order {
            0 => (1.0 - alpha / 2.0) + alpha / 2.0 * t * t,
            1 => alpha * t,
            _ => *alpha,
        },
        Family::Geometric { alpha } => {
            let g = 1.0 / (1.0 + alpha - alpha * t);
            match order {
                0 => g,
                1 => alpha * g * g,
                _ => 2.0 * alpha * alpha * g * g * g,
            }
        }
        Family::Poisson { alpha } => alpha.powi(order as i32) * (alpha * (t - 1.0)).exp(),
        Family::Custom { coeffs } => poly_eval(coeffs, t, order),
        Family::Stable { p, c, rho, alpha_s } => {
            let u = 1.0 - t / rho;
            let power = match order {
                0 => c * u.powf(*alpha_s),
                1 => -c * alpha_s / rho * u.powf(alpha_s - 1.0),
                _ => c * alpha_s * (alpha_s - 1.0) / (rho * rho) * u.powf(alpha_s - 2.0),
            };
            poly_eval(p, t, order) + power
        }
    }
}

fn poly_eval(coeffs: &[f64], t: f64, order: u8) -> f64 {
    let mut acc = 0.0;
    for (k, &c) in coeffs.iter().enumerate().rev() {
        let factor = match order {
            0 => 1.0,
            1 => k as f64,
            _ => (k * k.saturating_sub(1)) as f64,
        };
        if factor == 0.0 {
            continue;
        }
        let pow = k - order as usize;
        acc += c * factor * t.powi(pow as i32);
    }
    acc
}

/// `mu_k` of a stable law: polynomial part plus the generalized binomial
/// coefficient of `C (1 - t/rho)^{alpha_s}`.
fn stable_mu(p: &[f64], c: f64, rho: f64, alpha_s: f64, k: usize) -> f64 {
    let mut binom = 1.0; // binom(alpha_s, 0)
    let mut sign_pow = 1.0; // (-1/rho)^0
    for j in 0..k {
        binom *= (alpha_s - j as f64) / (j as f64 + 1.0);
        sign_pow *= -1.0 / rho;
    }
    p.get(k).copied().unwrap_or(0.0) + c * binom * sign_pow
}

fn stable_coeff_prefix(p: &[f64], c: f64, rho: f64, alpha_s: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut binom = 1.0;
    let mut sign_pow = 1.0;
    for k in 0..count {
        if k > 0 {
            binom *= (alpha_s - (k - 1) as f64) / k as f64;
            sign_pow *= -1.0 / rho;
        }
        out.push(p.get(k).copied().unwrap_or(0.0) + c * binom * sign_pow);
    }
    out
}

trait ToF64Lossy {
    fn to_f64_lossy(&self) -> f64;
}

impl ToF64Lossy for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

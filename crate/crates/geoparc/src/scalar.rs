//! Scalar abstraction for the series engine and the enumeration oracle.
//!
//! The same solver runs in two modes: exact rationals (`BigRational`) for
//! bit-exact comparison against the brute-force oracle, and `f64` with
//! compensated (Kahan) accumulation, since coefficients near the radius of
//! convergence span many orders of magnitude.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};


/// Ring scalar with an accumulator for sums of products.
pub trait Scalar: Clone + PartialEq + std::fmt::Debug {
    type Acc;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;

    fn acc_new() -> Self::Acc;
    /// acc += a * b
    fn acc_mul_add(acc: &mut Self::Acc, a: &Self, b: &Self);
    fn acc_value(acc: &Self::Acc) -> Self;

    fn to_f64(&self) -> f64;
    /// Magnitude used for trailing-coefficient truncation; rationals never
    /// truncate.
    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }
    /// Display form for CSV dumps (`p/q` strings in rational mode).
    fn csv_cell(&self) -> String;
    /// Bit size guard for the rational overflow check; `None` means unbounded
    /// scalars are impossible (floats).
    fn bits(&self) -> Option<usize> {
        None
    }
}

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

impl Scalar for f64 {
    type Acc = Kahan;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn acc_new() -> Kahan {
        Kahan::default()
    }
    #[inline]
    fn acc_mul_add(acc: &mut Kahan, a: &Self, b: &Self) {
        acc.add(a * b);
    }
    fn acc_value(acc: &Kahan) -> Self {
        acc.value()
    }

    fn to_f64(&self) -> f64 {
        *self
    }
    fn csv_cell(&self) -> String {
        format!("{self:e}")
    }
}

impl Scalar for BigRational {
    type Acc = BigRational;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn acc_new() -> BigRational {
        Zero::zero()
    }
    fn acc_mul_add(acc: &mut BigRational, a: &Self, b: &Self) {
        *acc += a * b;
    }
    fn acc_value(acc: &BigRational) -> Self {
        acc.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs_f64(&self) -> f64 {
        if Zero::is_zero(self) {
            0.0
        } else {
            // Never trigger trailing truncation in exact mode.
            f64::INFINITY
        }
    }
    fn csv_cell(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
    fn bits(&self) -> Option<usize> {
        Some((self.numer().bits() + self.denom().bits()) as usize)
    }
}

/// Exact dyadic rational for an `f64` (every finite float is rational).
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// The simplest rational within relative 1e-12 of `x`, via continued
/// fractions. A float parameter like `0.2` denotes `1/5`, not its dyadic
/// representative; laws built from snapped parameters keep their exact
/// coefficient tables human-sized. Falls back to the exact dyadic value
/// (the final convergent) for floats that are not near a simple fraction.
pub fn snap_to_rational(x: f64) -> Option<BigRational> {
    let exact = BigRational::from_float(x)?;
    let tol = 1e-12 * x.abs().max(1.0);
    let (mut h_prev, mut h) = (BigInt::one(), exact.floor().to_integer());
    let (mut k_prev, mut k) = (BigInt::zero(), BigInt::one());
    let mut rem = &exact - BigRational::from_integer(h.clone());
    loop {
        let convergent = BigRational::new(h.clone(), k.clone());
        if (ToPrimitive::to_f64(&convergent).unwrap_or(f64::NAN) - x).abs() <= tol {
            return Some(convergent);
        }
        if Zero::is_zero(&rem) {
            return Some(exact);
        }
        rem = rem.recip();
        let a = rem.floor().to_integer();
        rem -= BigRational::from_integer(a.clone());
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        h_prev = h;
        k_prev = k;
        h = h_next;
        k = k_next;
    }
}

/// Convenience constructor `p/q` from machine integers.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Nonnegativity check usable in both modes.
pub fn is_nonnegative<S: Scalar>(x: &S) -> bool {
    S::to_f64(x) >= 0.0
}

/// Signed check for rationals where `to_f64` may underflow to zero.
pub fn rational_is_negative(x: &BigRational) -> bool {
    x.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_compensates_small_terms() {
        let mut acc = Kahan::default();
        acc.add(1.0);
        for _ in 0..10_000_000 {
            acc.add(1e-16);
        }
        let naive: f64 = {
            let mut s = 1.0f64;
            for _ in 0..10_000_000 {
                s += 1e-16;
            }
            s
        };
        let exact = 1.0 + 1e-9;
        assert!((acc.value() - exact).abs() < 1e-15);
        // The naive sum loses everything below the ulp of 1.0.
        assert!((naive - exact).abs() > 1e-10);
    }

    #[test]
    fn rational_roundtrip() {
        let r = ratio(25, 648);
        assert_eq!(r.csv_cell(), "25/648");
        assert!((Scalar::to_f64(&r) - 25.0 / 648.0).abs() < 1e-16);
    }

    #[test]
    fn dyadic_conversion_is_exact() {
        let r = rational_from_f64(0.375).unwrap();
        assert_eq!(r, ratio(3, 8));
    }
}

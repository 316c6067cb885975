//! Frozen weight sums of fully parked trees.
//!
//! The values below were produced by the brute-force enumeration oracle
//! (first verified run, exact rational mode; cross-checked against the
//! series solver) and are pinned here as regression fixtures. The binary
//! zeros are structural: with arrivals in {0, 2}, a fully parked tree with
//! `n` vertices and `k` exits needs `n + k` arrivals, which must be even.

use geoparc::oracle::brute_force_coeff;
use geoparc::scalar::ratio;
use geoparc::series::{tutte_solve_f64, tutte_solve_rational};
use geoparc::ArrivalLaw;
use num_rational::BigRational;

fn rational(text: &str) -> BigRational {
    let (num, den) = text.split_once('/').unwrap();
    ratio(num.parse().unwrap(), den.parse().unwrap())
}

const GEOMETRIC_P_ONE_SIXTH: &[(usize, usize, &str)] = &[
    (1, 0, "5/36"),
    (2, 0, "25/648"),
    (3, 0, "125/5832"),
    (3, 1, "625/93312"),
    (4, 0, "25625/1679616"),
    (4, 2, "625/373248"),
    (5, 1, "603125/120932352"),
    (6, 0, "2984375/272097792"),
    (6, 3, "260734375/470184984576"),
];

const BINARY_ONE_FIFTH: &[(usize, usize, &str)] = &[
    (2, 0, "9/100"),
    (3, 0, "0/1"),
    (4, 0, "81/2000"),
    (4, 1, "0/1"),
    (5, 0, "0/1"),
    (6, 0, "16767/500000"),
    (6, 2, "1053/100000"),
];

#[allow(clippy::excessive_precision)] // frozen fixtures keep their full printed digits
const POISSON_03: &[(usize, usize, f64)] = &[
    (2, 0, 7.40895708726935637e-2),
    (3, 1, 1.52311158780321920e-2),
    (5, 0, 4.59790933208260380e-2),
    (5, 2, 5.10562742835060299e-3),
];

#[test]
fn geometric_goldens_hold_in_both_routes() {
    let law = ArrivalLaw::geometric_from_p(ratio(1, 6)).unwrap();
    let mu = law.rational_prefix(16).unwrap();
    let table = tutte_solve_rational(&law, 6, 3).unwrap();
    for &(n, k, text) in GEOMETRIC_P_ONE_SIXTH {
        let expect = rational(text);
        assert_eq!(brute_force_coeff(&mu, n, k).unwrap(), expect, "oracle ({n},{k})");
        assert_eq!(*table.coeff(n, k), expect, "series ({n},{k})");
    }
}

#[test]
fn geometric_alpha_constructor_matches_exact_p() {
    // alpha = 0.2 snaps to the exact mean 1/5, i.e. p = 1/6.
    let law = ArrivalLaw::geometric(0.2).unwrap();
    let table = tutte_solve_rational(&law, 6, 3).unwrap();
    for &(n, k, text) in GEOMETRIC_P_ONE_SIXTH {
        assert_eq!(*table.coeff(n, k), rational(text), "({n},{k})");
    }
}

#[test]
fn binary_goldens_hold_with_parity_zeros() {
    let law = ArrivalLaw::binary(0.2).unwrap();
    let mu = law.rational_prefix(16).unwrap();
    let table = tutte_solve_rational(&law, 6, 3).unwrap();
    for &(n, k, text) in BINARY_ONE_FIFTH {
        let expect = rational(text);
        assert_eq!(brute_force_coeff(&mu, n, k).unwrap(), expect, "oracle ({n},{k})");
        assert_eq!(*table.coeff(n, k), expect, "series ({n},{k})");
        if (n + k) % 2 == 1 {
            assert_eq!(expect, rational("0/1"), "odd total must vanish at ({n},{k})");
        }
    }
}

#[test]
fn poisson_goldens_hold_in_float_mode() {
    let law = ArrivalLaw::poisson(0.3).unwrap();
    let mu = law.coeff_prefix(16);
    let table = tutte_solve_f64(&law, 5, 2).unwrap();
    for &(n, k, expect) in POISSON_03 {
        let oracle = brute_force_coeff(&mu, n, k).unwrap();
        assert!((oracle - expect).abs() <= 1e-16, "oracle ({n},{k}): {oracle} vs {expect}");
        assert!((table.coeff(n, k) - expect).abs() <= 1e-15, "series ({n},{k})");
    }
}

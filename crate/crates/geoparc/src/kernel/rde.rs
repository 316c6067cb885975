//! Distributional recursion for the outgoing flux.
//!
//! The flux `Z = (X - 1)_+` of a vertex solves the distributional equation
//! `Z = (sum_{i=1}^{Y} Z_i + A - 1)_+` with `Y` geometric(q) offspring and
//! `A` the arrival law, all independent. Iterating the corresponding map on
//! laws starting from `Z = 0` computes the flux law of height-truncated
//! trees exactly, one layer per iteration: the iterates increase
//! stochastically, and in the subcritical phase they converge to the flux
//! law of the infinite tree — an oracle for the fixed point `p_o = P(X=0)`
//! that never touches the kernel parametrization.
//!
//! The geometric compound is computed by its own recursion
//! `S = 0 w.p. (1-q), else Z + S'`, i.e.
//! `s[j] (1 - q z[0]) = (1-q)[j=0] + q sum_{i>=1} z[i] s[j-i]`,
//! which avoids infinite convolution powers.

use crate::error::{Error, Result};
use crate::kernel::{classify, Phase};
use crate::law::{ArrivalLaw, OffspringParam};

/// Result of iterating the flux recursion.
#[derive(Debug, Clone)]
pub struct RdeResult {
    /// Law of the flux `Z` on `{0..cutoff}` after `iters` layers.
    pub flux_dist: Vec<f64>,
    /// Law of `X = A + sum Z_i` on the same tree (one entry longer than the
    /// flux support would need; index k holds P(X = k)).
    pub x_dist: Vec<f64>,
    /// `P(X = 0)` after the last layer.
    pub p_x_zero: f64,
    /// `P(X_h = 0)` after each layer h = 0, 1, ...; strictly decreasing.
    pub p_x_zero_history: Vec<f64>,
    /// Total probability mass lost beyond the cutoff.
    pub escaped_mass: f64,
}

/// Iterate the flux map `iters >= 1` times with support cutoff `cutoff`.
///
/// In a subcritical run the mass beyond the cutoff must stay below 1e-6;
/// exceeding it raises `CutoffTooSmall` (for supercritical pairs the escape
/// is expected — the flux diverges — and is simply reported).
pub fn iterate_rde(
    law: &ArrivalLaw,
    q: OffspringParam,
    iters: usize,
    cutoff: usize,
) -> Result<RdeResult> {
    assert!(iters >= 1 && cutoff >= 1);
    let qv = q.q();
    // Arrival coefficients, trimmed where the tail stops mattering.
    let mut mu = law.coeff_prefix(cutoff + 2);
    while mu.len() > 2 && *mu.last().unwrap() < 1e-18 {
        mu.pop();
    }

    let mu_mass: f64 = mu.iter().sum();

    let mut z = vec![0.0f64; cutoff + 1];
    z[0] = 1.0;
    let mut x_dist = Vec::new();
    let mut history = Vec::with_capacity(iters);
    // Truncation losses, accumulated per step. (The naive `1 - sum(z)`
    // bookkeeping is useless here: float drift in the total is amplified by
    // the supercritical factor q/(1-q) every layer, while the genuine tail
    // beyond any sane cutoff is astronomically small.)
    let mut escaped = 0.0f64;
    for _ in 0..iters {
        // Geometric(q) compound of z.
        let z_mass: f64 = z.iter().sum();
        let mut s = vec![0.0f64; cutoff + 2];
        let denom = 1.0 - qv * z[0];
        s[0] = (1.0 - qv) / denom;
        for j in 1..=cutoff + 1 {
            let mut acc = 0.0;
            for i in 1..=j.min(cutoff) {
                acc += z[i] * s[j - i];
            }
            s[j] = qv * acc / denom;
        }
        // The untruncated compound of the (possibly defective) z has total
        // mass (1-q)/(1 - q z_mass); whatever is missing fell off the end.
        let s_mass: f64 = s.iter().sum();
        escaped += ((1.0 - qv) / (1.0 - qv * z_mass) - s_mass).max(0.0);
        // Add the arrivals: law of X.
        let mut x = vec![0.0f64; cutoff + 2];
        for (a, &ma) in mu.iter().enumerate() {
            if ma == 0.0 {
                continue;
            }
            for j in 0..=(cutoff + 1 - a).min(cutoff + 1) {
                x[a + j] += ma * s[j];
            }
        }
        let x_mass: f64 = x.iter().sum();
        escaped += (mu_mass * s_mass - x_mass).max(0.0) + (1.0 - mu_mass) * s_mass;
        history.push(x[0]);
        // Shift by -1 and clamp at zero: the next flux law.
        let mut z_next = vec![0.0f64; cutoff + 1];
        z_next[0] = x[0] + x[1];
        z_next[1..=cutoff].copy_from_slice(&x[2..=cutoff + 1]);
        // The exact layer iterates are probability vectors (up to the
        // cutoff loss accounted above). Roundoff defects in the total mass
        // are amplified by q/(1-q) at every layer, so project them away.
        let z_mass_next: f64 = z_next.iter().sum();
        let target = 1.0 - escaped;
        if z_mass_next > 0.0 {
            let scale = target / z_mass_next;
            for v in &mut z_next {
                *v *= scale;
            }
        }
        z = z_next;
        x_dist = x;
    }
    let escaped_mass = escaped;
    if escaped_mass > 1e-6 {
        if let Ok(report) = classify(law, q) {
            if report.phase == Phase::Subcritical {
                return Err(Error::CutoffTooSmall { cutoff, escaped: escaped_mass });
            }
        }
    }
    let p_x_zero = *history.last().unwrap();
    x_dist.truncate(cutoff + 1);
    Ok(RdeResult { flux_dist: z, x_dist, p_x_zero, p_x_zero_history: history, escaped_mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;

    fn geo02() -> ArrivalLaw {
        ArrivalLaw::geometric(0.2).unwrap()
    }

    #[test]
    fn one_layer_is_clamped_shifted_arrival_law() {
        let law = geo02();
        let q = OffspringParam::new(0.52).unwrap();
        let r = iterate_rde(&law, q, 1, 50).unwrap();
        // Leaves receive no flux: Z = (A - 1)_+.
        assert!((r.flux_dist[0] - (law.mu(0) + law.mu(1))).abs() < 1e-15);
        for k in 1..40 {
            assert!((r.flux_dist[k] - law.mu(k + 1)).abs() < 1e-15, "k = {k}");
        }
        assert!((r.p_x_zero - law.mu(0)).abs() < 1e-15);
    }

    #[test]
    fn subcritical_iteration_converges_to_fixed_point() {
        let law = geo02();
        let q = OffspringParam::new(0.52).unwrap();
        let kernel = Kernel::new(&law).unwrap();
        let fp = kernel.solve_p_circ(q).unwrap().unwrap();
        let r = iterate_rde(&law, q, 60, 200).unwrap();
        assert!(
            (r.p_x_zero - fp.p_circ).abs() <= 1e-6,
            "iterated {} vs fixed point {}",
            r.p_x_zero,
            fp.p_circ
        );
        // The layer marginals decrease towards the limit.
        for w in r.p_x_zero_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn iterates_increase_stochastically() {
        let law = geo02();
        let q = OffspringParam::new(0.53).unwrap();
        let mut prev_cdf: Option<Vec<f64>> = None;
        for iters in [1, 2, 4, 8, 16] {
            let r = iterate_rde(&law, q, iters, 150).unwrap();
            let cdf: Vec<f64> = r
                .flux_dist
                .iter()
                .scan(0.0, |acc, &p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect();
            if let Some(prev) = prev_cdf {
                for (a, b) in prev.iter().zip(&cdf) {
                    assert!(b <= &(a + 1e-12), "CDF must decrease pointwise");
                }
            }
            prev_cdf = Some(cdf);
        }
    }

    #[test]
    fn supercritical_mass_at_zero_stays_below_extinction() {
        let law = geo02();
        let q = OffspringParam::new(0.56).unwrap();
        let r = iterate_rde(&law, q, 60, 200).unwrap();
        for w in r.p_x_zero_history.windows(2) {
            assert!(w[1] < w[0], "strictly decreasing in the supercritical phase");
        }
        // P(X = 0) can never exceed the extinction probability in the limit.
        assert!(r.p_x_zero >= 0.0);
        let extinction = q.extinction_probability();
        let last_drop = r.p_x_zero_history[58] - r.p_x_zero_history[59];
        assert!(
            r.p_x_zero - 60.0 * last_drop < extinction,
            "p = {}, extinction = {extinction}",
            r.p_x_zero
        );
    }

    #[test]
    fn tiny_cutoff_in_subcritical_run_is_rejected() {
        let law = geo02();
        let q = OffspringParam::new(0.54).unwrap();
        let err = iterate_rde(&law, q, 400, 8).unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { .. }), "{err}");
    }
}

//! Arrival samplers: inverse-CDF tables for finite/truncated supports and
//! closed-form draws for the geometric and Poisson families.

use rand::Rng;

/// Cumulative table for inverse-CDF sampling. The draw returns the smallest
/// `k` with `CDF(k) >= u`; a draw beyond the last entry (possible when the
/// table is a truncation of an infinite support) falls into the last bucket.
#[derive(Debug, Clone)]
pub struct CdfTable {
    cdf: Vec<f64>,
}

impl CdfTable {
    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = coeffs
            .iter()
            .map(|&c| {
                acc += c;
                acc
            })
            .collect();
        CdfTable { cdf }
    }

    /// Smallest `k` with `CDF(k) >= u`.
    pub fn quantile(&self, u: f64) -> u64 {
        let i = self.cdf.partition_point(|&c| c < u);
        i.min(self.cdf.len() - 1) as u64
    }
}

#[derive(Debug, Clone)]
pub(super) enum ArrivalSampler {
    Table(CdfTable),
    Geometric { p: f64 },
    Poisson { exp_neg_alpha: f64 },
}

impl ArrivalSampler {
    pub(super) fn table(coeffs: &[f64]) -> Self {
        ArrivalSampler::Table(CdfTable::from_coeffs(coeffs))
    }

    pub(super) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            ArrivalSampler::Table(t) => t.quantile(rng.gen::<f64>()),
            ArrivalSampler::Geometric { p } => {
                // P(K >= k) = p^k, so K = floor(ln(1-u)/ln(p)) with 1-u in (0,1].
                let u: f64 = rng.gen();
                ((1.0 - u).ln() / p.ln()).floor() as u64
            }
            ArrivalSampler::Poisson { exp_neg_alpha } => {
                // Knuth's product-of-uniforms method; fine for desk-scale means.
                let mut k = 0u64;
                let mut prod: f64 = rng.gen();
                while prod > *exp_neg_alpha {
                    prod *= rng.gen::<f64>();
                    k += 1;
                }
                k
            }
        }
    }
}

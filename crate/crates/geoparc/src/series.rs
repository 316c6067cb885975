//! Truncated bivariate series solver for the fully-parked-tree generating
//! function.
//!
//! `F(x, y) = sum_{n>=1, k>=0} c[n][k] x^n y^k` counts plane fully parked
//! trees by vertices (`x`) and outgoing cars (`y`), weighted by the arrival
//! law. It satisfies the root-decomposition equation
//!
//! ```text
//! F(x, y) = (x/y) * ( G(y)/(1 - F(x,y)) - G(0)/(1 - F(x,0)) )
//! ```
//!
//! which determines the x-degree-n slice of `F` from the earlier slices: the
//! bracket's y-constant term vanishes identically, so the division by `y` is
//! an exact coefficient shift. The solver walks x-degree by x-degree,
//! maintaining the reciprocal `1/(1 - F)` through its own recurrence, and
//! runs either on exact rationals or on floats with compensated summation.
//!
//! Slices are carried internally to y-degree `k_max + n_max + 1` so that
//! every exposed coefficient `c[n][k]`, `k <= k_max`, is exact for any
//! arrival law: each x-degree step shifts one y-degree down, so truncation
//! at the exposed cap alone would contaminate the last columns.

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::law::{ArrivalLaw, OffspringParam};
use crate::scalar::{Kahan, Scalar};

/// Rational-mode size guard (numerator plus denominator bits per entry).
const RATIONAL_BIT_LIMIT: usize = 1 << 20;

/// Relative magnitude below which trailing float coefficients are treated as
/// absent when sizing convolutions. Far below every tolerance in use.
const TRIM_REL: f64 = 1e-30;

/// Truncated coefficient table of `F`.
#[derive(Debug, Clone)]
pub struct BivariateSeries<S: Scalar> {
    n_max: usize,
    k_max: usize,
    /// `rows[n-1]` holds the slice of x-degree n up to the internal y-cap.
    rows: Vec<Vec<S>>,
    /// Largest relative y-constant residual observed while dividing by y.
    y_residual_max: f64,
}

impl<S: Scalar> BivariateSeries<S> {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Coefficient `[x^n y^k] F` for `1 <= n <= n_max`, `k <= k_max`.
    pub fn coeff(&self, n: usize, k: usize) -> &S {
        assert!((1..=self.n_max).contains(&n) && k <= self.k_max);
        &self.rows[n - 1][k]
    }

    /// Worst relative y-constant-term residual of the bracket across all
    /// x-degrees (exactly zero in rational mode).
    pub fn y_residual_max(&self) -> f64 {
        self.y_residual_max
    }

    /// Slice evaluation `sum_k c[n][k] y^k` over the full internal cap.
    fn slice_eval(&self, n: usize, y: f64) -> f64 {
        let mut acc = Kahan::default();
        let mut yk = 1.0;
        for c in &self.rows[n - 1] {
            acc.add(c.to_f64() * yk);
            yk *= y;
        }
        acc.value()
    }

    /// `a_n = [x^n] F(x, 1)` for every n, summed over the internal y-cap.
    pub fn row_sums_at_one(&self) -> Vec<f64> {
        (1..=self.n_max).map(|n| self.slice_eval(n, 1.0)).collect()
    }

    /// Ratio `a_{n_max} / a_{n_max - 1}` of successive coefficients of
    /// `F(x, 1)`, which converges to the reciprocal of the radius.
    pub fn radius_ratio_estimate(&self) -> f64 {
        let sums = self.row_sums_at_one();
        let n = sums.len();
        assert!(n >= 2, "need at least two x-degrees");
        sums[n - 1] / sums[n - 2]
    }

    /// CSV dump `n,k,coeff` of the nonzero exposed entries.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,k,coeff\n");
        for n in 1..=self.n_max {
            for k in 0..=self.k_max {
                let c = self.coeff(n, k);
                if !c.is_zero() {
                    out.push_str(&format!("{n},{k},{}\n", c.csv_cell()));
                }
            }
        }
        out
    }
}

/// Significant length of a slice: trailing entries below `TRIM_REL` times
/// the slice maximum are ignored when sizing convolutions. Rational slices
/// never trim.
fn significant_len<S: Scalar>(v: &[S]) -> usize {
    let mut max = 0.0f64;
    for c in v {
        let a = c.abs_f64();
        if a.is_finite() {
            max = max.max(a);
        } else {
            max = f64::INFINITY;
            break;
        }
    }
    if max == 0.0 {
        return 0;
    }
    let threshold = if max.is_finite() { max * TRIM_REL } else { 0.0 };
    let mut len = v.len();
    while len > 0 {
        let a = v[len - 1].abs_f64();
        if a > threshold || (a != 0.0 && !a.is_finite()) {
            break;
        }
        len -= 1;
    }
    len
}

/// acc[i+j] += a[i] * b[j], truncated at the accumulator length.
fn conv_acc<S: Scalar>(acc: &mut [S::Acc], a: &[S], la: usize, b: &[S], lb: usize) {
    let cap = acc.len();
    for i in 0..la.min(cap) {
        if a[i].is_zero() {
            continue;
        }
        let jmax = lb.min(cap - i);
        for j in 0..jmax {
            S::acc_mul_add(&mut acc[i + j], &a[i], &b[j]);
        }
    }
}

/// Solve the root-decomposition equation degree by degree.
///
/// `mu` must contain `mu_0 ..= mu_{k_max + n_max + 2}`. Use
/// [`tutte_solve_f64`] / [`tutte_solve_rational`] to drive it from a law.
pub fn tutte_solve<S: Scalar>(mu: &[S], n_max: usize, k_max: usize) -> Result<BivariateSeries<S>> {
    if n_max < 1 {
        return Err(Error::BadTruncation("n_max must be at least 1".into()));
    }
    let kp = k_max + n_max + 1; // working y-degree cap
    assert!(mu.len() >= kp + 2, "need mu up to degree {}", kp + 1);

    let g: Vec<S> = mu[..=kp].to_vec();
    let lg = significant_len(&g);

    // f[n-1] = x-degree-n slice; r[m] = [x^m] 1/(1 - F).
    let mut f: Vec<Vec<S>> = Vec::with_capacity(n_max);
    let mut f_len: Vec<usize> = Vec::with_capacity(n_max);
    let mut r: Vec<Vec<S>> = Vec::with_capacity(n_max);
    let mut r_len: Vec<usize> = Vec::with_capacity(n_max);
    let mut r0: Vec<S> = Vec::with_capacity(n_max); // scalar recurrence for 1/(1 - F(x,0))
    let mut y_residual_max = 0.0f64;

    // Degree 0: 1/(1 - F) = 1.
    let mut r0_vec = vec![S::zero(); kp + 1];
    r0_vec[0] = S::one();
    r.push(r0_vec);
    r_len.push(1);
    r0.push(S::one());

    // Degree 1: the single-vertex tree with a_root = k + 1.
    let f1: Vec<S> = (0..=kp).map(|k| mu[k + 1].clone()).collect();
    f_len.push(significant_len(&f1));
    f.push(f1);

    for n in 2..=n_max {
        let m = n - 1;
        // r_m = sum_{i=1}^{m} f_i * r_{m-i}
        let mut acc: Vec<S::Acc> = (0..=kp).map(|_| S::acc_new()).collect();
        for i in 1..=m {
            conv_acc::<S>(&mut acc, &f[i - 1], f_len[i - 1], &r[m - i], r_len[m - i]);
        }
        let r_m: Vec<S> = acc.iter().map(S::acc_value).collect();
        // Scalar recurrence for the y = 0 specialization, same product
        // order, used to certify the y-constant cancellation.
        let mut acc0 = S::acc_new();
        for i in 1..=m {
            S::acc_mul_add(&mut acc0, &f[i - 1][0], &r0[m - i]);
        }
        let r0_m = S::acc_value(&acc0);

        // Bracket slice: G(y) * r_m(y); its y-constant term must equal
        // G(0) * r0_m, i.e. the full bracket has no constant term.
        let mut acc: Vec<S::Acc> = (0..=kp).map(|_| S::acc_new()).collect();
        conv_acc::<S>(&mut acc, &g, lg, &r_m, significant_len(&r_m));
        let gr: Vec<S> = acc.iter().map(S::acc_value).collect();

        let expected0 = g[0].mul(&r0_m);
        let residual = gr[0].sub(&expected0).to_f64().abs();
        let scale = expected0.to_f64().abs().max(1.0);
        y_residual_max = y_residual_max.max(residual / scale);

        // Divide by y: shift one degree down.
        let mut f_n = vec![S::zero(); kp + 1];
        f_n[..kp].clone_from_slice(&gr[1..]);
        if let Some(bits) = f_n.iter().filter_map(Scalar::bits).max() {
            if bits > RATIONAL_BIT_LIMIT {
                return Err(Error::Overflow { degree: n, limit_bits: RATIONAL_BIT_LIMIT });
            }
        }
        f_len.push(significant_len(&f_n));
        f.push(f_n);
        r_len.push(significant_len(&r_m));
        r.push(r_m);
        r0.push(r0_m);
    }

    // Expose up to k_max; keep the internal tail for y-evaluations.
    Ok(BivariateSeries { n_max, k_max, rows: f, y_residual_max })
}

/// Float-mode solve driven by a law.
pub fn tutte_solve_f64(law: &ArrivalLaw, n_max: usize, k_max: usize) -> Result<BivariateSeries<f64>> {
    let need = k_max + n_max + 3;
    tutte_solve(&law.coeff_prefix(need), n_max, k_max)
}

/// Exact-rational solve; requires a rational-capable family.
pub fn tutte_solve_rational(
    law: &ArrivalLaw,
    n_max: usize,
    k_max: usize,
) -> Result<BivariateSeries<BigRational>> {
    let need = k_max + n_max + 3;
    let mu = law
        .rational_prefix(need)
        .ok_or_else(|| Error::BadParam(format!("{} has no exact coefficients", law.family().name())))?;
    tutte_solve(&mu, n_max, k_max)
}

/// Default exposed y-cap: exact support width for bounded arrivals, a
/// generous multiple otherwise (tunable per call site).
pub fn default_k_max(law: &ArrivalLaw, n_max: usize) -> usize {
    match law.max_arrival() {
        Some(b) => n_max * (b - 1),
        None => 4 * n_max,
    }
}

/// Evaluation of the table plus a geometric bound on the omitted mass.
#[derive(Debug, Clone, Copy)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// Evaluate `F(x, y)` from the table for `x >= 0`, `y` in [0, 1], with a
/// tail bound extrapolated from the observed coefficient decay. Fails with
/// `NearRadius` when the x-terms decay slower than 1% per degree, since the
/// geometric extrapolation is then unreliable.
pub fn series_eval<S: Scalar>(table: &BivariateSeries<S>, x: f64, y: f64) -> Result<SeriesValue> {
    assert!(x >= 0.0 && (0.0..=1.0).contains(&y));
    if x == 0.0 {
        return Ok(SeriesValue { value: 0.0, tail_bound: 0.0 });
    }
    let n_max = table.n_max;
    let mut terms = Vec::with_capacity(n_max);
    let mut value = Kahan::default();
    let mut xn = 1.0;
    let mut y_tail = 0.0f64;
    for n in 1..=n_max {
        xn *= x;
        let s = table.slice_eval(n, y);
        let term = s * xn;
        terms.push(term);
        value.add(term);
        // Omitted y-degrees beyond the internal cap, extrapolated from the
        // last two stored coefficients of the slice.
        if y > 0.0 {
            let row = &table.rows[n - 1];
            let last = row[row.len() - 1].to_f64().abs();
            let prev = row[row.len() - 2].to_f64().abs();
            if last > 0.0 && prev > 0.0 {
                let rho = (last / prev * y).min(0.99);
                let ylast = last * y.powi(row.len() as i32 - 1);
                y_tail += xn * ylast * rho / (1.0 - rho);
            }
        }
    }
    // Estimate the limiting term ratio. Raw ratios approach it from below
    // with O(1/n) corrections (square-root singularity), so extrapolate the
    // 1/n term away (Richardson) when enough degrees are available.
    let ratio_at = |n: usize| -> Option<f64> {
        let a = terms[n - 2].abs();
        let b = terms[n - 1].abs();
        (a > 0.0 && b > 0.0).then(|| b / a)
    };
    let raw = ratio_at(n_max);
    let estimate = match (n_max >= 20, raw, ratio_at(n_max - 1)) {
        (true, Some(r1), Some(r0)) => {
            let n = n_max as f64;
            let rich = n * r1 - (n - 1.0) * r0;
            if rich >= r1 && rich <= r1 * 1.1 {
                rich
            } else {
                r1 * (n / (n - 1.0)).powf(1.5)
            }
        }
        (_, Some(r1), _) => r1 * (n_max as f64 / (n_max as f64 - 1.0)).powf(1.5),
        _ => 0.0,
    };
    if estimate >= 0.99 {
        return Err(Error::NearRadius { x, radius: x / estimate });
    }
    let r = estimate.min(0.985);
    let n_tail = 2.0 * terms[n_max - 1].abs() * r / (1.0 - r);
    // Floating-point floor: summation roundoff plus the precision the
    // caller can meaningfully compare against.
    let abs_sum: f64 = terms.iter().map(|t| t.abs()).sum();
    let roundoff = 2e-15 * (1.0 + abs_sum);
    Ok(SeriesValue { value: value.value(), tail_bound: n_tail + y_tail + roundoff })
}

/// Exact law of the number of cars `X` visiting the root in the subcritical
/// phase, computed from the table at the Boltzmann point.
#[derive(Debug, Clone)]
pub struct FluxDistribution {
    /// P(X = 0).
    pub p_zero: f64,
    /// `p[k] = P(X = k + 1)`.
    pub p: Vec<f64>,
    /// Nonnegative mass deficit `1 - p_zero - sum p[k]` from truncation.
    pub deficit: f64,
    /// Stated bound on the deficit, from the series tail estimate.
    pub deficit_bound: f64,
    /// The Boltzmann argument `x_o = q(1-q)/(1 - q p_zero)^2`.
    pub x_boltzmann: f64,
}

impl FluxDistribution {
    /// `P(X >= k)` for `k >= 1`, from the stored prefix.
    pub fn tail_prob(&self, k: usize) -> f64 {
        assert!(k >= 1);
        let head: f64 = self.p.iter().take(k - 1).sum();
        (1.0 - self.p_zero - head).max(0.0)
    }
}

/// `P(X = k+1) = (1 - q p_o)/q * [y^k] F(x_o, y)` for `k <= k_max`.
///
/// `p_circ` must be the fixed point `P(X = 0)` of the subcritical phase;
/// passing a supercritical pair is reported as `NotSubcritical` when the
/// series visibly diverges at the Boltzmann point.
pub fn flux_distribution_exact<S: Scalar>(
    q: OffspringParam,
    p_circ: f64,
    table: &BivariateSeries<S>,
) -> Result<FluxDistribution> {
    assert!((0.0..=1.0).contains(&p_circ));
    let qv = q.q();
    let x_o = qv * (1.0 - qv) / (1.0 - qv * p_circ).powi(2);
    let scale = (1.0 - qv * p_circ) / qv;
    let total = series_eval(table, x_o, 1.0).map_err(|e| match e {
        Error::NearRadius { .. } => {
            Error::NotSubcritical(format!("series diverges at the Boltzmann point x = {x_o}"))
        }
        other => other,
    })?;

    let mut p = Vec::with_capacity(table.k_max + 1);
    for k in 0..=table.k_max {
        let mut acc = Kahan::default();
        let mut xn = 1.0;
        for n in 1..=table.n_max {
            xn *= x_o;
            acc.add(table.rows[n - 1][k].to_f64() * xn);
        }
        p.push(scale * acc.value());
    }
    let deficit = 1.0 - p_circ - scale * total.value;
    // Row mass beyond k_max is still genuine flux mass, not deficit; fold it
    // into the reported deficit by comparing against the k-prefix sum.
    let prefix: f64 = p.iter().sum();
    let deficit_prefix = 1.0 - p_circ - prefix;
    Ok(FluxDistribution {
        p_zero: p_circ,
        p,
        deficit: deficit_prefix.max(0.0),
        deficit_bound: scale * total.tail_bound + (deficit_prefix - deficit).abs() + 1e-12,
        x_boltzmann: x_o,
    })
}

//! Monte Carlo simulation of the parking process on sampled geometric(q)
//! trees.
//!
//! Trees are generated breadth first and truncated at a height cap (and a
//! vertex-count guard for parameters close to 1), so the vertex order is
//! also the layered parking order. Sample `i` of a run draws from stream
//! `i` of a counter-based ChaCha generator seeded with the master seed, so
//! results are reproducible bit for bit under any degree of parallelism;
//! aggregation only ever sums integer tallies, which keeps the reduction
//! order irrelevant.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::kernel::{solve_p_circ, FixedPoint};
use crate::law::{ArrivalLaw, OffspringParam};
use crate::oracle::PlaneTree;
use crate::park::{park_cars, ParkResult};
use crate::series::{flux_distribution_exact, tutte_solve_f64, FluxDistribution};

/// How a sampled tree was terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Died out before any cap.
    Complete,
    /// Reached the height cap with at least one vertex.
    HeightCapped,
    /// Hit the vertex-count guard.
    VertexCapped,
}

/// A breadth-first sampled tree. Children of a vertex occupy a contiguous
/// index range, in birth order, so the plane structure is the index order.
#[derive(Debug, Clone)]
pub struct SampledTree {
    pub parents: Vec<u32>,
    pub depths: Vec<u32>,
    first_child: Vec<u32>,
    degree: Vec<u32>,
    /// Vertices per level.
    pub level_sizes: Vec<u64>,
    pub truncation: Truncation,
}

impl SampledTree {
    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        false // there is always a root
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let start = self.first_child[v] as usize;
        start..start + self.degree[v] as usize
    }

    /// Number of vertices at depth <= h (a prefix of the index order).
    pub fn prefix_len(&self, h: u32) -> usize {
        self.level_sizes.iter().take(h as usize + 1).sum::<u64>() as usize
    }
}

/// Sample a geometric(q) tree, cut above `cap_height`.
pub fn sample_tree<R: Rng + ?Sized>(
    q: OffspringParam,
    cap_height: u32,
    cap_vertices: usize,
    rng: &mut R,
) -> SampledTree {
    let qv = q.q();
    let ln_q = qv.ln();
    let mut parents = vec![0u32];
    let mut depths = vec![0u32];
    let mut first_child = vec![0u32];
    let mut degree = vec![0u32];
    let mut level_sizes = vec![1u64];
    let mut truncation = Truncation::Complete;
    let mut level_start = 0usize;
    'outer: for depth in 0..cap_height {
        let level_end = parents.len();
        if level_start == level_end {
            break;
        }
        for v in level_start..level_end {
            // P(K >= k) = q^k.
            let u: f64 = rng.gen();
            let sampled = ((1.0 - u).ln() / ln_q).floor() as usize;
            let room = cap_vertices.saturating_sub(parents.len());
            let d = sampled.min(room);
            first_child[v] = parents.len() as u32;
            degree[v] = d as u32;
            for _ in 0..d {
                parents.push(v as u32);
                depths.push(depth + 1);
                first_child.push(0);
                degree.push(0);
            }
            if d < sampled || parents.len() >= cap_vertices {
                truncation = Truncation::VertexCapped;
                let born = parents.len() - level_end;
                if born > 0 {
                    level_sizes.push(born as u64);
                }
                break 'outer;
            }
        }
        let born = parents.len() - level_end;
        if born > 0 {
            level_sizes.push(born as u64);
        }
        level_start = level_end;
    }
    if truncation == Truncation::Complete
        && level_sizes.len() as u32 == cap_height + 1
        && *level_sizes.last().unwrap() > 0
    {
        truncation = Truncation::HeightCapped;
    }
    SampledTree { parents, depths, first_child, degree, level_sizes, truncation }
}

/// Parking outcome on a sampled tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParkOutcome {
    pub arrivals: Vec<u64>,
    pub occupied: Vec<bool>,
    pub visits: Vec<u64>,
    /// Cars visiting the root.
    pub root_visits: u64,
    /// Outgoing flux `(X - 1)_+`.
    pub flux: u64,
    /// Size of the root's occupied cluster; zero when the root stays empty.
    pub root_cluster_size: u64,
}

impl ParkOutcome {
    pub fn root_occupied(&self) -> bool {
        self.occupied[0]
    }
}

/// Sample i.i.d. arrivals and park them by increasing depth.
pub fn park_layered<R: Rng + ?Sized>(
    tree: &SampledTree,
    law: &ArrivalLaw,
    rng: &mut R,
) -> ParkOutcome {
    let arrivals: Vec<u64> = (0..tree.len()).map(|_| law.sample_arrival(rng)).collect();
    park_given_arrivals(tree, arrivals)
}

/// Park a fixed arrival vector (breadth-first order is the layered order).
pub fn park_given_arrivals(tree: &SampledTree, arrivals: Vec<u64>) -> ParkOutcome {
    let cars = expand_cars(&arrivals, arrivals.len());
    let result = park_cars(&tree.parents, &cars);
    finish_outcome(tree, arrivals, result)
}

fn expand_cars(arrivals: &[u64], upto: usize) -> Vec<u32> {
    let total: u64 = arrivals[..upto].iter().sum();
    let mut cars = Vec::with_capacity(total as usize);
    for (v, &a) in arrivals[..upto].iter().enumerate() {
        for _ in 0..a {
            cars.push(v as u32);
        }
    }
    cars
}

fn finish_outcome(tree: &SampledTree, arrivals: Vec<u64>, result: ParkResult) -> ParkOutcome {
    let ParkResult { occupied, visits, exits } = result;
    let root_visits = visits[0];
    debug_assert!(root_visits == 0 || occupied[0], "a visited root is occupied");
    for v in 0..arrivals.len() {
        debug_assert!(visits[v] >= arrivals[v], "every arrival visits its own vertex");
        debug_assert!(!occupied[v] || visits[v] >= 1);
    }
    let root_cluster_size = root_cluster_size(tree, &occupied);
    ParkOutcome { arrivals, occupied, visits, root_visits, flux: exits, root_cluster_size }
}

fn root_cluster_size(tree: &SampledTree, occupied: &[bool]) -> u64 {
    if !occupied[0] {
        return 0;
    }
    let mut size = 0u64;
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        size += 1;
        for c in tree.children(v) {
            if occupied[c] {
                stack.push(c);
            }
        }
    }
    size
}

/// Flux of the same arrival configuration on the height-h truncation.
pub fn flux_at_height(tree: &SampledTree, arrivals: &[u64], h: u32) -> u64 {
    let n = tree.prefix_len(h);
    let cars = expand_cars(arrivals, n);
    park_cars(&tree.parents[..n], &cars).flux()
}

/// Preorder child-count and arrival encoding of the root's occupied
/// cluster, in plane order; `None` when the root is empty.
pub fn root_cluster_encoding(
    tree: &SampledTree,
    outcome: &ParkOutcome,
) -> Option<(Vec<u32>, Vec<u64>)> {
    if !outcome.root_occupied() {
        return None;
    }
    let mut counts = Vec::new();
    let mut arrivals = Vec::new();
    fn walk(
        tree: &SampledTree,
        outcome: &ParkOutcome,
        v: usize,
        counts: &mut Vec<u32>,
        arrivals: &mut Vec<u64>,
    ) {
        let kids: Vec<usize> = tree.children(v).filter(|&c| outcome.occupied[c]).collect();
        counts.push(kids.len() as u32);
        arrivals.push(outcome.arrivals[v]);
        for c in kids {
            walk(tree, outcome, c, counts, arrivals);
        }
    }
    walk(tree, outcome, 0, &mut counts, &mut arrivals);
    Some((counts, arrivals))
}

/// Experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub samples: usize,
    pub cap_height: u32,
    pub cap_vertices: usize,
    /// Flux histogram support: P(X = k) tracked for k <= k_max.
    pub k_max: usize,
    pub seed: u64,
    /// Heights at which the flux of the truncated tree is also recorded
    /// (common random numbers across heights).
    pub flux_heights: Vec<u32>,
}

impl ExperimentConfig {
    pub fn new(samples: usize, cap_height: u32, k_max: usize, seed: u64) -> Self {
        ExperimentConfig {
            samples,
            cap_height,
            cap_vertices: 2_000_000,
            k_max,
            seed,
            flux_heights: Vec::new(),
        }
    }
}

/// Parse the experiment JSON: `{law, q, samples, cap_height, K, seed}`.
pub fn experiment_from_json(text: &str) -> Result<(ArrivalLaw, OffspringParam, ExperimentConfig)> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Io(format!("experiment config: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::BadParam("experiment config must be a JSON object".into()))?;
    let law = crate::law::law_from_json(
        obj.get("law").ok_or_else(|| Error::BadParam("missing \"law\"".into()))?,
    )?;
    let num = |key: &str| -> Result<f64> {
        obj.get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::BadParam(format!("missing numeric \"{key}\"")))
    };
    let q = OffspringParam::new(num("q")?)?;
    let config = ExperimentConfig::new(
        num("samples")? as usize,
        num("cap_height")? as u32,
        num("K")? as usize,
        num("seed")? as u64,
    );
    Ok((law, q, config))
}

/// Integer tallies of one run; summing tallies is exact, so any reduction
/// order gives the same result.
#[derive(Debug, Clone, Default)]
struct Tally {
    samples: u64,
    /// Counts of X = k for k <= k_max, overflow in the last slot.
    x_counts: Vec<u64>,
    survived: u64,
    vertex_capped: u64,
    cluster_sizes: BTreeMap<u64, u64>,
    max_cluster: u64,
    /// Per flux height: histogram of the truncated flux over surviving trees.
    flux_hists: Vec<BTreeMap<u64, u64>>,
    target_matches: u64,
}

impl Tally {
    fn new(k_max: usize, heights: usize) -> Self {
        Tally {
            x_counts: vec![0; k_max + 2],
            flux_hists: vec![BTreeMap::new(); heights],
            ..Default::default()
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.samples += other.samples;
        for (a, b) in self.x_counts.iter_mut().zip(&other.x_counts) {
            *a += b;
        }
        self.survived += other.survived;
        self.vertex_capped += other.vertex_capped;
        for (k, v) in other.cluster_sizes {
            *self.cluster_sizes.entry(k).or_insert(0) += v;
        }
        self.max_cluster = self.max_cluster.max(other.max_cluster);
        for (mine, theirs) in self.flux_hists.iter_mut().zip(other.flux_hists) {
            for (k, v) in theirs {
                *mine.entry(k).or_insert(0) += v;
            }
        }
        self.target_matches += other.target_matches;
        self
    }
}

fn one_sample(
    law: &ArrivalLaw,
    q: OffspringParam,
    config: &ExperimentConfig,
    target: Option<&(Vec<u32>, Vec<u64>)>,
    index: u64,
    tally: &mut Tally,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index);
    let tree = sample_tree(q, config.cap_height, config.cap_vertices, &mut rng);
    let outcome = park_layered(&tree, law, &mut rng);

    tally.samples += 1;
    let k = (outcome.root_visits as usize).min(config.k_max + 1);
    tally.x_counts[k] += 1;
    let survived = tree.truncation != Truncation::Complete;
    if survived {
        tally.survived += 1;
    }
    if tree.truncation == Truncation::VertexCapped {
        tally.vertex_capped += 1;
    }
    *tally.cluster_sizes.entry(outcome.root_cluster_size).or_insert(0) += 1;
    tally.max_cluster = tally.max_cluster.max(outcome.root_cluster_size);
    if survived && !config.flux_heights.is_empty() {
        for (i, &h) in config.flux_heights.iter().enumerate() {
            let f = flux_at_height(&tree, &outcome.arrivals, h.min(config.cap_height));
            *tally.flux_hists[i].entry(f).or_insert(0) += 1;
        }
    }
    if let Some((counts, arrivals)) = target {
        if let Some((c, a)) = root_cluster_encoding(&tree, &outcome) {
            if &c == counts && &a == arrivals {
                tally.target_matches += 1;
            }
        }
    }
}

fn run_tally(
    law: &ArrivalLaw,
    q: OffspringParam,
    config: &ExperimentConfig,
    target: Option<&(Vec<u32>, Vec<u64>)>,
) -> Tally {
    let heights = config.flux_heights.len();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..config.samples as u64)
            .into_par_iter()
            .fold(
                || Tally::new(config.k_max, heights),
                |mut t, i| {
                    one_sample(law, q, config, target, i, &mut t);
                    t
                },
            )
            .reduce(|| Tally::new(config.k_max, heights), Tally::merge)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut t = Tally::new(config.k_max, heights);
        for i in 0..config.samples as u64 {
            one_sample(law, q, config, target, i, &mut t);
        }
        t
    }
}

/// Monte Carlo estimates with binomial standard errors.
#[derive(Debug, Clone)]
pub struct MonteCarloStats {
    pub samples: u64,
    /// `(p_hat, se)` for P(X = k), k <= k_max.
    pub x_probs: Vec<(f64, f64)>,
    /// Empirical mass of X > k_max.
    pub x_overflow: f64,
    /// Frequency of reaching the height cap, with standard error.
    pub survival: (f64, f64),
    pub vertex_capped: u64,
    /// Median truncated flux over surviving trees, per requested height.
    pub median_flux_by_height: Vec<(u32, Option<u64>)>,
    pub cluster_sizes: BTreeMap<u64, u64>,
    pub max_root_cluster: u64,
}

impl MonteCarloStats {
    fn from_tally(config: &ExperimentConfig, tally: Tally) -> Self {
        let n = tally.samples as f64;
        let binom = |count: u64| {
            let p = count as f64 / n;
            (p, (p * (1.0 - p) / n).sqrt())
        };
        let x_probs = (0..=config.k_max).map(|k| binom(tally.x_counts[k])).collect();
        let x_overflow = tally.x_counts[config.k_max + 1] as f64 / n;
        let survival = binom(tally.survived);
        let median_flux_by_height = config
            .flux_heights
            .iter()
            .zip(&tally.flux_hists)
            .map(|(&h, hist)| (h, median_of_hist(hist)))
            .collect();
        MonteCarloStats {
            samples: tally.samples,
            x_probs,
            x_overflow,
            survival,
            vertex_capped: tally.vertex_capped,
            median_flux_by_height,
            cluster_sizes: tally.cluster_sizes,
            max_root_cluster: tally.max_cluster,
        }
    }

    /// CSV rows `stat,k_or_n,value,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stat,k_or_n,value,stderr\n");
        for (k, (p, se)) in self.x_probs.iter().enumerate() {
            out.push_str(&format!("p_x,{k},{p:e},{se:e}\n"));
        }
        out.push_str(&format!("p_x_overflow,,{:e},\n", self.x_overflow));
        out.push_str(&format!("survival,,{:e},{:e}\n", self.survival.0, self.survival.1));
        out.push_str(&format!("vertex_capped,,{},\n", self.vertex_capped));
        for (h, median) in &self.median_flux_by_height {
            match median {
                Some(m) => out.push_str(&format!("median_flux,{h},{m},\n")),
                None => out.push_str(&format!("median_flux,{h},,\n")),
            }
        }
        let n = self.samples as f64;
        for (size, count) in self.cluster_sizes.iter().take(64) {
            let p = *count as f64 / n;
            let se = (p * (1.0 - p) / n).sqrt();
            out.push_str(&format!("cluster_size,{size},{p:e},{se:e}\n"));
        }
        out.push_str(&format!("max_root_cluster,,{},\n", self.max_root_cluster));
        out
    }
}

fn median_of_hist(hist: &BTreeMap<u64, u64>) -> Option<u64> {
    let total: u64 = hist.values().sum();
    if total == 0 {
        return None;
    }
    let mut acc = 0u64;
    for (&k, &v) in hist {
        acc += v;
        if 2 * acc >= total {
            return Some(k);
        }
    }
    None
}

/// Run `config.samples` independent parking experiments.
pub fn run_experiment(
    law: &ArrivalLaw,
    q: OffspringParam,
    config: &ExperimentConfig,
) -> MonteCarloStats {
    MonteCarloStats::from_tally(config, run_tally(law, q, config, None))
}

/// Empirical frequency that the root cluster equals a specific decorated
/// tree, against its closed-form probability
/// `w(t) (1-q)^n q^{n-1} (1 - q p_o)^{-(2n-1)}`.
#[derive(Debug, Clone)]
pub struct ClusterProbe {
    pub frequency: f64,
    pub stderr: f64,
    pub predicted: f64,
    pub matches: u64,
    pub samples: u64,
}

pub fn cluster_probe(
    law: &ArrivalLaw,
    q: OffspringParam,
    target_tree: &PlaneTree,
    target_arrivals: &[u64],
    config: &ExperimentConfig,
) -> Result<ClusterProbe> {
    let n = target_tree.size();
    assert!(n <= 4, "desk-scale targets only");
    assert_eq!(target_arrivals.len(), n);
    let fp = solve_p_circ(law, q)?
        .ok_or_else(|| Error::NotSubcritical(format!("no fixed point at q = {}", q.q())))?;
    let weight: f64 = target_arrivals.iter().map(|&a| law.mu(a as usize)).product();
    let qv = q.q();
    let predicted = weight * (1.0 - qv).powi(n as i32) * qv.powi(n as i32 - 1)
        / (1.0 - qv * fp.p_circ).powi(2 * n as i32 - 1);

    let target = (target_tree.child_counts().to_vec(), target_arrivals.to_vec());
    let tally = run_tally(law, q, config, Some(&target));
    let total = tally.samples as f64;
    let freq = tally.target_matches as f64 / total;
    let se = (freq * (1.0 - freq) / total).sqrt();
    Ok(ClusterProbe {
        frequency: freq,
        stderr: se,
        predicted,
        matches: tally.target_matches,
        samples: tally.samples,
    })
}

/// Boundedness report for `(q/(1-q))^k P(X >= k)`.
#[derive(Debug, Clone)]
pub struct TailRateReport {
    /// Exact normalized tail for k = 1..=k_grid.
    pub exact_ratio: Vec<f64>,
    /// Last value at most 10x the running median of the sequence.
    pub bounded: bool,
    /// Monte Carlo version for k <= 6.
    pub mc_ratio: Vec<f64>,
    /// Root-cluster histogram tail decreases over dyadic size bins and
    /// never touches the vertex cap.
    pub cluster_tail_ok: bool,
    pub max_cluster_seen: u64,
    pub flux: FluxDistribution,
}

/// Check the geometric tail-rate bound of the subcritical flux, exactly
/// (from the series table) and empirically.
pub fn tail_rate_check(
    law: &ArrivalLaw,
    q: OffspringParam,
    config: &ExperimentConfig,
    k_grid: usize,
) -> Result<TailRateReport> {
    let fp: FixedPoint = solve_p_circ(law, q)?
        .ok_or_else(|| Error::NotSubcritical(format!("no fixed point at q = {}", q.q())))?;
    let table = tutte_solve_f64(law, 300, k_grid.max(40) + 20)?;
    let flux = flux_distribution_exact(q, fp.p_circ, &table)?;
    let rate = q.q() / (1.0 - q.q());
    let exact_ratio: Vec<f64> =
        (1..=k_grid).map(|k| rate.powi(k as i32) * flux.tail_prob(k)).collect();
    let mut sorted = exact_ratio.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let bounded = *exact_ratio.last().unwrap() <= 10.0 * median;

    let stats = run_experiment(law, q, config);
    let mc_ratio: Vec<f64> = (1..=6.min(config.k_max))
        .map(|k| {
            let tail: f64 =
                stats.x_probs.iter().skip(k).map(|(p, _)| p).sum::<f64>() + stats.x_overflow;
            rate.powi(k as i32) * tail
        })
        .collect();

    // Dyadic histogram of positive cluster sizes.
    let mut bins = vec![0u64; 40];
    for (&size, &count) in &stats.cluster_sizes {
        if size > 0 {
            bins[(64 - size.leading_zeros()) as usize] += count;
        }
    }
    while bins.last() == Some(&0) {
        bins.pop();
    }
    let peak = bins.iter().enumerate().max_by_key(|(_, &c)| c).map_or(0, |(i, _)| i);
    let mut cluster_tail_ok = (stats.max_root_cluster as usize) < config.cap_vertices;
    for w in bins[peak..].windows(2) {
        // Allow Poisson-level noise in sparse bins.
        if w[1] as f64 > w[0] as f64 + 3.0 * (w[0] as f64).sqrt() + 3.0 {
            cluster_tail_ok = false;
        }
    }
    Ok(TailRateReport {
        exact_ratio,
        bounded,
        mc_ratio,
        cluster_tail_ok,
        max_cluster_seen: stats.max_root_cluster,
        flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    fn geo02() -> ArrivalLaw {
        ArrivalLaw::geometric(0.2).unwrap()
    }

    fn q(v: f64) -> OffspringParam {
        OffspringParam::new(v).unwrap()
    }

    #[test]
    fn level_means_match_branching_growth() {
        let q6 = q(0.6);
        let samples = 100_000;
        let max_level = 8usize;
        let mut sums = vec![0u64; max_level + 1];
        let mut sq_sums = vec![0f64; max_level + 1];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..samples {
            let tree = sample_tree(q6, max_level as u32, 2_000_000, &mut rng);
            for (lvl, &z) in tree.level_sizes.iter().enumerate() {
                sums[lvl] += z;
                sq_sums[lvl] += (z * z) as f64;
            }
        }
        for lvl in 1..=max_level {
            let mean = sums[lvl] as f64 / samples as f64;
            let expect = 1.5f64.powi(lvl as i32);
            let var = sq_sums[lvl] / samples as f64 - mean * mean;
            let se = (var / samples as f64).sqrt();
            assert!(
                (mean - expect).abs() <= 3.0 * se,
                "level {lvl}: mean {mean}, expect {expect}, se {se}"
            );
        }
    }

    #[test]
    fn extinction_frequency_matches_closed_form() {
        let q6 = q(0.6);
        let samples = 30_000u32;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut extinct = 0u32;
        for _ in 0..samples {
            // Surviving trees explode exponentially; the vertex guard stops
            // them early and they still count as survivors (dying after
            // 5000 live vertices has vanishing probability).
            let tree = sample_tree(q6, 40, 5_000, &mut rng);
            if tree.truncation == Truncation::Complete {
                extinct += 1;
            }
        }
        let freq = extinct as f64 / samples as f64;
        let expect = q6.extinction_probability();
        let se = (expect * (1.0 - expect) / samples as f64).sqrt();
        assert!((freq - expect).abs() <= 3.0 * se, "freq {freq} vs {expect}");
    }

    #[test]
    fn vertex_cap_halts_generation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tree = sample_tree(q(0.95), 100, 500, &mut rng);
        assert_eq!(tree.truncation, Truncation::VertexCapped);
        assert!(tree.len() <= 500);
    }

    #[test]
    fn single_vertex_outcome() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // Height cap 0: only the root.
        let tree = sample_tree(q(0.6), 0, 10, &mut rng);
        assert_eq!(tree.len(), 1);
        let outcome = park_given_arrivals(&tree, vec![3]);
        assert_eq!(outcome.root_visits, 3);
        assert_eq!(outcome.flux, 2);
        assert!(outcome.root_occupied());
        assert_eq!(outcome.root_cluster_size, 1);
    }

    #[test]
    fn truncation_is_monotone_under_common_randomness() {
        let law = geo02();
        let q58 = q(0.58);
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(7);
            let tree = sample_tree(q58, 30, 2_000_000, &mut rng);
            let outcome = park_layered(&tree, &law, &mut rng);
            let f10 = flux_at_height(&tree, &outcome.arrivals, 10);
            let f20 = flux_at_height(&tree, &outcome.arrivals, 20);
            let f30 = flux_at_height(&tree, &outcome.arrivals, 30);
            assert!(f10 <= f20 && f20 <= f30, "seed {seed}: {f10} {f20} {f30}");
            assert_eq!(f30, outcome.flux);
        }
    }

    #[test]
    fn parking_is_abelian_on_sampled_trees() {
        let law = geo02();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut tested = 0;
        while tested < 200 {
            let tree = sample_tree(q(0.55), 12, 200, &mut rng);
            if tree.truncation == Truncation::VertexCapped {
                continue;
            }
            let outcome = park_layered(&tree, &law, &mut rng);
            let mut cars = expand_cars(&outcome.arrivals, tree.len());
            for _ in 0..5 {
                cars.shuffle(&mut rng);
                let shuffled = park_cars(&tree.parents, &cars);
                assert_eq!(shuffled.occupied, outcome.occupied);
                assert_eq!(shuffled.visits, outcome.visits);
                assert_eq!(shuffled.flux(), outcome.flux);
            }
            tested += 1;
        }
    }

    #[test]
    fn experiments_are_deterministic() {
        let law = geo02();
        let mut config = ExperimentConfig::new(2_000, 12, 6, 1234);
        config.flux_heights = vec![4, 8, 12];
        let a = run_experiment(&law, q(0.54), &config);
        let b = run_experiment(&law, q(0.54), &config);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn experiment_json_roundtrip() {
        let text = r#"{
            "law": {"family": "geometric", "alpha": 0.2},
            "q": 0.52, "samples": 1000, "cap_height": 20, "K": 8, "seed": 7
        }"#;
        let (law, qq, config) = experiment_from_json(text).unwrap();
        assert_eq!(law.family().name(), "geometric");
        assert_eq!(qq.q(), 0.52);
        assert_eq!(
            (config.samples, config.cap_height, config.k_max, config.seed),
            (1000, 20, 8, 7)
        );
    }

    #[test]
    fn subcritical_flux_matches_fixed_point() {
        let law = geo02();
        let q52 = q(0.52);
        let fp = solve_p_circ(&law, q52).unwrap().unwrap();
        let config = ExperimentConfig::new(20_000, 30, 4, 99);
        let stats = run_experiment(&law, q52, &config);
        let (p0, se0) = stats.x_probs[0];
        assert!((p0 - fp.p_circ).abs() <= 3.0 * se0, "p0 {p0} vs {}, se {se0}", fp.p_circ);
    }

    #[test]
    fn cluster_probe_single_vertex_target() {
        let law = geo02();
        let q52 = q(0.52);
        let target = crate::oracle::enum_plane_trees(1).unwrap().remove(0);
        let config = ExperimentConfig::new(40_000, 25, 4, 5);
        let probe = cluster_probe(&law, q52, &target, &[1], &config).unwrap();
        // Predicted mu_1 (1-q) / (1 - q p_o).
        let fp = solve_p_circ(&law, q52).unwrap().unwrap();
        let expect = law.mu(1) * 0.48 / (1.0 - 0.52 * fp.p_circ);
        assert!((probe.predicted - expect).abs() < 1e-12);
        assert!(
            (probe.frequency - probe.predicted).abs() <= 3.0 * probe.stderr,
            "freq {} vs predicted {} (se {})",
            probe.frequency,
            probe.predicted,
            probe.stderr
        );
    }

    #[test]
    fn cluster_probe_two_vertex_target() {
        // Path of two with arrivals (0, 2): weight mu_0 mu_2, two vertices,
        // one edge, three corners for empty spots.
        let law = geo02();
        let q52 = q(0.52);
        let target = crate::oracle::enum_plane_trees(2).unwrap().remove(0);
        let config = ExperimentConfig::new(60_000, 25, 4, 6);
        let probe = cluster_probe(&law, q52, &target, &[0, 2], &config).unwrap();
        let fp = solve_p_circ(&law, q52).unwrap().unwrap();
        let expect = law.mu(0) * law.mu(2) * 0.48 * 0.48 * 0.52 / (1.0 - 0.52 * fp.p_circ).powi(3);
        assert!((probe.predicted - expect).abs() < 1e-12);
        assert!(
            (probe.frequency - probe.predicted).abs() <= 3.0 * probe.stderr,
            "freq {} vs predicted {} (se {})",
            probe.frequency,
            probe.predicted,
            probe.stderr
        );
    }

    #[test]
    fn cluster_probe_requires_subcritical() {
        let law = geo02();
        let target = crate::oracle::enum_plane_trees(1).unwrap().remove(0);
        let config = ExperimentConfig::new(100, 10, 4, 5);
        let err = cluster_probe(&law, q(0.58), &target, &[1], &config).unwrap_err();
        assert!(matches!(err, Error::NotSubcritical(_)));
    }

    #[test]
    fn tail_rate_is_bounded_in_subcritical_phase() {
        let law = geo02();
        let config = ExperimentConfig::new(20_000, 25, 8, 11);
        let report = tail_rate_check(&law, q(0.52), &config, 30).unwrap();
        assert!(report.bounded, "exact ratios: {:?}", report.exact_ratio);
        assert!(report.cluster_tail_ok);
        assert!(report.flux.deficit <= report.flux.deficit_bound);
        for (k, r) in report.mc_ratio.iter().enumerate() {
            assert!(r.is_finite() && *r >= 0.0, "k = {k}");
        }
    }
}

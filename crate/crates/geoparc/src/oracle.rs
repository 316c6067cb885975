//! Brute-force ground truth for the generating function of fully parked
//! trees.
//!
//! A fully parked tree with `n` vertices and `k` outgoing cars is a plane
//! tree decorated with arrivals summing to `n + k` whose final parking
//! configuration occupies every vertex (equivalently, the root is visited by
//! exactly `k + 1` cars). This module enumerates every plane tree and
//! arrival vector at desk scale, runs the parking dynamics, and sums the
//! weights `prod mu_{a_u}` of the fully parked outcomes — with exact
//! rational arithmetic when the law permits, so the series engine can be
//! checked bit for bit.

use crate::error::{Error, Result};
use crate::park::{depths_from_parents, park_arrivals};
use crate::scalar::Scalar;
use crate::series::BivariateSeries;

/// Enumeration caps: trees up to 10 vertices, brute-force sums up to
/// (n, k) = (8, 5).
pub const MAX_TREE_SIZE: usize = 10;
pub const MAX_BRUTE_N: usize = 8;
pub const MAX_BRUTE_K: usize = 5;

/// A rooted plane tree in preorder child-count encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneTree {
    child_counts: Vec<u32>,
    parents: Vec<u32>,
    depths: Vec<u32>,
    subtree_sizes: Vec<u32>,
}

impl PlaneTree {
    /// Build from a preorder child-count sequence (must be a valid
    /// single-tree encoding).
    pub fn from_child_counts(child_counts: Vec<u32>) -> Self {
        let n = child_counts.len();
        let mut parents = vec![0u32; n];
        let mut stack: Vec<(usize, u32)> = Vec::new(); // (vertex, children still open)
        for v in 0..n {
            if let Some(&mut (p, ref mut open)) = stack.last_mut() {
                parents[v] = p as u32;
                *open -= 1;
            } else {
                assert_eq!(v, 0, "encoding is not a single tree");
            }
            while let Some(&(_, 0)) = stack.last() {
                stack.pop();
            }
            if child_counts[v] > 0 {
                stack.push((v, child_counts[v]));
            }
        }
        while let Some(&(_, 0)) = stack.last() {
            stack.pop();
        }
        assert!(stack.is_empty(), "encoding is not a single tree");
        let depths = depths_from_parents(&parents);
        let mut subtree_sizes = vec![1u32; n];
        for v in (1..n).rev() {
            subtree_sizes[parents[v] as usize] += subtree_sizes[v];
        }
        PlaneTree { child_counts, parents, depths, subtree_sizes }
    }

    pub fn size(&self) -> usize {
        self.child_counts.len()
    }

    pub fn child_counts(&self) -> &[u32] {
        &self.child_counts
    }

    pub fn parents(&self) -> &[u32] {
        &self.parents
    }

    pub fn depths(&self) -> &[u32] {
        &self.depths
    }
}

/// All plane trees with `n` vertices, in lexicographic child-count order.
/// There are Catalan(n-1) of them.
pub fn enum_plane_trees(n: usize) -> Result<Vec<PlaneTree>> {
    if n == 0 || n > MAX_TREE_SIZE {
        return Err(Error::TooLarge(format!("tree size {n} outside 1..={MAX_TREE_SIZE}")));
    }
    let mut out = Vec::new();
    let mut seq = Vec::with_capacity(n);
    gen_child_counts(&mut seq, 1, n as u32, &mut out);
    Ok(out)
}

fn gen_child_counts(seq: &mut Vec<u32>, open: u32, remaining: u32, out: &mut Vec<PlaneTree>) {
    if remaining == 0 {
        if open == 0 {
            out.push(PlaneTree::from_child_counts(seq.clone()));
        }
        return;
    }
    if open == 0 {
        return;
    }
    // Place the next preorder vertex with c children; every promised slot
    // still needs a vertex, so c can use at most the slack remaining - open.
    for c in 0..=(remaining - open) {
        seq.push(c);
        gen_child_counts(seq, open - 1 + c, remaining - 1, out);
        seq.pop();
    }
}

/// Weight sum over fully parked decorations of all plane trees with `n`
/// vertices and `k` outgoing cars, given the coefficient prefix
/// `mu_0 ..= mu_{n+k}`.
pub fn brute_force_coeff<S: Scalar>(mu: &[S], n: usize, k: usize) -> Result<S> {
    if n == 0 || n > MAX_BRUTE_N || k > MAX_BRUTE_K {
        return Err(Error::TooLarge(format!(
            "(n, k) = ({n}, {k}) outside 1..={MAX_BRUTE_N} x 0..={MAX_BRUTE_K}"
        )));
    }
    let total = n + k;
    assert!(mu.len() > total, "need coefficients up to mu_{total}");
    let mut acc = S::acc_new();
    let one = S::one();
    for tree in enum_plane_trees(n)? {
        // Subtrees are contiguous in preorder; record which subtrees end at
        // each position so underfilled branches are pruned immediately
        // (cars only flow rootward, so a subtree must receive at least its
        // own size).
        let mut ends_at: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
        for v in 0..n {
            let size = tree.subtree_sizes[v];
            ends_at[v + size as usize - 1].push((v, size));
        }
        let mut arrivals = vec![0u64; n];
        let mut prefix = vec![0u64; n + 1];
        enumerate_arrivals(
            &tree,
            &ends_at,
            mu,
            &mut arrivals,
            &mut prefix,
            0,
            total as u64,
            &one,
            &mut |arrivals, weight| {
                let outcome = park_arrivals(&tree.parents, &tree.depths, arrivals);
                let fully_parked = outcome.occupied_count() == n;
                let exits_match = outcome.root_visits() == k as u64 + 1;
                debug_assert_eq!(
                    fully_parked, exits_match,
                    "full occupation and root visits must agree on {arrivals:?}"
                );
                if fully_parked {
                    S::acc_mul_add(&mut acc, weight, &S::one());
                }
            },
        );
    }
    Ok(S::acc_value(&acc))
}

#[allow(clippy::too_many_arguments)]
fn enumerate_arrivals<S: Scalar>(
    tree: &PlaneTree,
    ends_at: &[Vec<(usize, u32)>],
    mu: &[S],
    arrivals: &mut Vec<u64>,
    prefix: &mut Vec<u64>,
    pos: usize,
    remaining: u64,
    weight: &S,
    visit: &mut impl FnMut(&[u64], &S),
) {
    let n = tree.size();
    if pos == n {
        if remaining == 0 {
            visit(arrivals, weight);
        }
        return;
    }
    let max_here = if pos == n - 1 { remaining } else { remaining.min(mu.len() as u64 - 1) };
    for a in 0..=max_here {
        if mu[a as usize].is_zero() {
            continue;
        }
        arrivals[pos] = a;
        prefix[pos + 1] = prefix[pos] + a;
        let ok = ends_at[pos]
            .iter()
            .all(|&(start, size)| prefix[pos + 1] - prefix[start] >= size as u64);
        if ok {
            let w = weight.mul(&mu[a as usize]);
            enumerate_arrivals(tree, ends_at, mu, arrivals, prefix, pos + 1, remaining - a, &w, visit);
        }
    }
    arrivals[pos] = 0;
}

/// One comparison row of [`oracle_compare`].
#[derive(Debug, Clone)]
pub struct OracleRow {
    pub n: usize,
    pub k: usize,
    pub oracle: String,
    pub tutte: String,
    pub delta: f64,
    pub exact_match: bool,
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub mode: &'static str,
    pub rows: Vec<OracleRow>,
    pub max_delta: f64,
    /// Tolerance actually applied: exact zero in rational mode, 1e-12 in
    /// float mode.
    pub tolerance: f64,
}

impl OracleReport {
    pub fn all_within_tolerance(&self) -> bool {
        if self.tolerance == 0.0 {
            self.rows.iter().all(|r| r.exact_match)
        } else {
            self.max_delta <= self.tolerance
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,k,oracle,tutte,delta,mode\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:e},{}\n",
                r.n, r.k, r.oracle, r.tutte, r.delta, self.mode
            ));
        }
        out
    }
}

/// Compare the brute-force sums against a solved series table on the full
/// grid `1..=n_max x 0..=k_max`. Disagreements become report rows; nothing
/// panics here.
pub fn oracle_compare<S: Scalar>(
    mu: &[S],
    table: &BivariateSeries<S>,
    n_max: usize,
    k_max: usize,
    mode: &'static str,
    tolerance: f64,
) -> Result<OracleReport> {
    let mut rows = Vec::new();
    let mut max_delta = 0.0f64;
    for n in 1..=n_max {
        for k in 0..=k_max {
            let oracle = brute_force_coeff(mu, n, k)?;
            let tutte = table.coeff(n, k);
            let delta = (oracle.to_f64() - tutte.to_f64()).abs();
            max_delta = max_delta.max(delta);
            rows.push(OracleRow {
                n,
                k,
                oracle: oracle.csv_cell(),
                tutte: tutte.csv_cell(),
                delta,
                exact_match: &oracle == tutte,
            });
        }
    }
    Ok(OracleReport { mode, rows, max_delta, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::ArrivalLaw;
    use crate::park::park_cars;
    use crate::scalar::ratio;
    use num_rational::BigRational;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalan_counts() {
        let expected = [1usize, 1, 2, 5, 14, 42, 132, 429, 1430, 4862];
        for n in 1..=10 {
            assert_eq!(enum_plane_trees(n).unwrap().len(), expected[n - 1], "n = {n}");
        }
        assert!(enum_plane_trees(11).is_err());
    }

    #[test]
    fn trees_are_distinct() {
        let trees = enum_plane_trees(6).unwrap();
        for i in 0..trees.len() {
            for j in i + 1..trees.len() {
                assert_ne!(trees[i].child_counts, trees[j].child_counts);
            }
        }
    }

    fn rational_prefix(law: &ArrivalLaw, count: usize) -> Vec<BigRational> {
        law.rational_prefix(count).expect("rational law")
    }

    #[test]
    fn single_vertex_weight_is_mu_kplus1() {
        let law = ArrivalLaw::geometric_from_p(ratio(1, 6)).unwrap();
        let mu = rational_prefix(&law, 10);
        for k in 0..5 {
            assert_eq!(
                brute_force_coeff(&mu, 1, k).unwrap(),
                law.mu_rational(k + 1).unwrap(),
                "k = {k}"
            );
        }
    }

    #[test]
    fn two_vertex_hand_count() {
        // Path of two: child must receive at least one car, the root gets
        // the rest, so the weight is sum over a_c of mu_{a_c} mu_{k+2-a_c}.
        let law = ArrivalLaw::geometric_from_p(ratio(1, 6)).unwrap();
        let mu = rational_prefix(&law, 12);
        for k in 0..4usize {
            let direct = brute_force_coeff(&mu, 2, k).unwrap();
            let mut hand = BigRational::new(0.into(), 1.into());
            for a_c in 1..=(k + 2) {
                hand += &mu[a_c] * &mu[k + 2 - a_c];
            }
            assert_eq!(direct, hand, "k = {k}");
        }

        // Binary law, k = 0: only (root 0, child 2) contributes.
        let bin = ArrivalLaw::binary(0.2).unwrap();
        let mu = rational_prefix(&bin, 6);
        assert_eq!(brute_force_coeff(&mu, 2, 0).unwrap(), ratio(9, 100));
        assert_eq!(brute_force_coeff(&mu, 2, 0).unwrap().to_f64(), 0.09);
    }

    #[test]
    fn parking_order_independent_on_enumerated_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for tree in enum_plane_trees(5).unwrap() {
            let arrivals = [2u64, 0, 1, 3, 0];
            let reference = park_arrivals(tree.parents(), tree.depths(), &arrivals);
            let mut cars: Vec<u32> = Vec::new();
            for (v, &a) in arrivals.iter().enumerate() {
                for _ in 0..a {
                    cars.push(v as u32);
                }
            }
            for _ in 0..20 {
                cars.shuffle(&mut rng);
                assert_eq!(park_cars(tree.parents(), &cars), reference);
            }
        }
    }

    #[test]
    fn rescaled_rational_representation_gives_same_values() {
        // 9/10 and 90/100 describe the same law; the sums must agree exactly.
        let a = ArrivalLaw::custom_exact(vec![ratio(9, 10), ratio(0, 1), ratio(1, 10)]).unwrap();
        let b =
            ArrivalLaw::custom_exact(vec![ratio(90, 100), ratio(0, 100), ratio(10, 100)]).unwrap();
        let mu_a = rational_prefix(&a, 9);
        let mu_b = rational_prefix(&b, 9);
        for n in 1..=4 {
            for k in 0..=2 {
                assert_eq!(
                    brute_force_coeff(&mu_a, n, k).unwrap(),
                    brute_force_coeff(&mu_b, n, k).unwrap()
                );
            }
        }
    }

    #[test]
    fn caps_are_enforced() {
        let law = ArrivalLaw::binary(0.2).unwrap();
        let mu = rational_prefix(&law, 20);
        assert!(matches!(brute_force_coeff(&mu, 9, 0), Err(Error::TooLarge(_))));
        assert!(matches!(brute_force_coeff(&mu, 4, 6), Err(Error::TooLarge(_))));
    }
}

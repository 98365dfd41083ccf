//! Helpers shared by the integration tests. Also included by the CLI
//! acceptance runner through a `#[path]` module.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use bmt_core::determinant::prufer_decode;
use bmt_core::likelihood::{loglik_gradient, loglik_value};
use bmt_core::toric::{exponent_matrix, pairs};
use bmt_core::{BigRational, Complex64, PhyloTree, SampleCovariance};
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random tree on leaves `0..=n` in the root-at-0 Newick convention.
/// Internal nodes get between two and four children.
pub fn random_newick(n: usize, seed: u64) -> String {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = (1..=n).collect();
    labels.shuffle(&mut rng);
    let mut items: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
    // the group next to leaf 0 needs at least two members
    while items.len() > 2 && rng.random_bool(0.7) {
        let k = rng.random_range(2..=items.len().min(4));
        if k == items.len() {
            break;
        }
        items.shuffle(&mut rng);
        let group: Vec<String> = items.drain(..k).collect();
        items.push(format!("({})", group.join(",")));
    }
    items.shuffle(&mut rng);
    format!("({},0);", items.join(","))
}

/// Nonzero rationals `±a/b` with `1 ≤ a ≤ 9`, `1 ≤ b ≤ 7`.
pub fn random_rationals(len: usize, positive: bool, rng: &mut ChaCha8Rng) -> Vec<BigRational> {
    (0..len)
        .map(|_| {
            let a: i64 = rng.random_range(1..=9);
            let b: i64 = rng.random_range(1..=7);
            let a = if !positive && rng.random_bool(0.5) {
                -a
            } else {
                a
            };
            BigRational::new(a.into(), b.into())
        })
        .collect()
}

/// Positive reals in `[0.3, 2.0]`.
pub fn random_positive(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(0.3..2.0)).collect()
}

/// Degree of the projective toric variety cut out by the vanishing ideal of
/// the path map, from its Hilbert function. Every pair covers exactly two
/// pendant edges, so the ideal is homogeneous and `h(d)` is the number of
/// distinct sums of exactly `d` exponent columns; past the regularity the
/// `(#E − 1)`-th finite difference of `h` is the degree. Returns `None`
/// unless the last `stable` differences up to `d_max` agree.
pub fn hilbert_degree(tree: &PhyloTree, d_max: usize, stable: usize) -> Option<u64> {
    let a = exponent_matrix(tree);
    let r = a.num_edges();
    // a coordinate of a sum of d columns is at most d
    let bits = if r <= 10 { 6 } else { 5 };
    assert!(
        r * bits <= 64 && d_max < 1 << bits,
        "does not fit a packed key"
    );
    let cols: Vec<u64> = (0..a.pairs.len())
        .map(|c| {
            a.column(c)
                .iter()
                .enumerate()
                .map(|(e, &x)| (x as u64) << (bits * e))
                .sum()
        })
        .collect();
    let mut layer: HashSet<u64> = HashSet::from([0]);
    let mut h = vec![1i64];
    for _ in 1..=d_max {
        let mut next = HashSet::with_capacity(layer.len() * 2);
        for &x in &layer {
            for &c in &cols {
                next.insert(x + c);
            }
        }
        h.push(next.len() as i64);
        layer = next;
    }
    let mut diff = h;
    for _ in 0..r - 1 {
        diff = diff.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let tail = &diff[diff.len().checked_sub(stable)?..];
    if tail.iter().all(|&v| v == tail[0]) && tail[0] > 0 {
        Some(tail[0] as u64)
    } else {
        None
    }
}

/// Σ over labelled trees on `m` vertices of `∏ x_v^{deg v}`, by decoding
/// every Prüfer sequence; keyed by exponent vector.
pub fn prufer_degree_census(m: usize) -> BTreeMap<Vec<u32>, u64> {
    let mut out = BTreeMap::new();
    let len = m - 2;
    let total = m.pow(len as u32);
    for code in 0..total {
        let mut seq = Vec::with_capacity(len);
        let mut c = code;
        for _ in 0..len {
            seq.push(c % m);
            c /= m;
        }
        let mut deg = vec![0u32; m];
        for (a, b) in prufer_decode(&seq, m) {
            deg[a] += 1;
            deg[b] += 1;
        }
        *out.entry(deg).or_insert(0) += 1;
    }
    out
}

/// All sign patterns on the edges that leave every path product unchanged.
pub fn sign_stabilizer_count(tree: &PhyloTree) -> u64 {
    let edges = tree.num_edges();
    let paths: Vec<u64> = pairs(tree.n())
        .into_iter()
        .map(|(i, j)| {
            tree.path_edges(i, j)
                .unwrap()
                .edges()
                .iter()
                .map(|&e| 1u64 << e)
                .sum()
        })
        .collect();
    (0u64..1 << edges)
        .filter(|mask| paths.iter().all(|p| (p & mask).count_ones() % 2 == 0))
        .count() as u64
}

/// `tr(SK)` in exact arithmetic.
#[allow(clippy::needless_range_loop)]
pub fn trace(s: &SampleCovariance, k: &[Vec<BigRational>]) -> BigRational {
    let n = k.len();
    let mut t = BigRational::zero();
    for i in 0..n {
        for j in 0..n {
            t += s.s(i + 1, j + 1) * &k[j][i];
        }
    }
    t
}

/// Largest relative gap between the analytic score and a central finite
/// difference of ℓ, over all edges, at a positive point.
pub fn score_error(tree: &PhyloTree, s: &SampleCovariance, theta: &[f64]) -> f64 {
    let z: Vec<Complex64> = theta.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    let grad = loglik_gradient(tree, s, &z);
    let mut worst = 0.0f64;
    for e in 0..tree.num_edges() {
        let h = 1e-5 * theta[e];
        let mut up = theta.to_vec();
        let mut down = theta.to_vec();
        up[e] += h;
        down[e] -= h;
        let fd = (loglik_value(tree, s, &up).unwrap() - loglik_value(tree, s, &down).unwrap())
            / (2.0 * h);
        let g = grad[e];
        worst = worst
            .max(g.im.abs())
            .max((fd - g.re).abs() / g.re.abs().max(1.0));
    }
    worst
}

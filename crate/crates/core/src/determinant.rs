//! The concentration determinant: Laplacian of the weighted complete graph,
//! the product formula over internal nodes, and a spanning-tree oracle.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::linalg::{det_bareiss, det_laplace, RingElem};
use crate::poly::SparsePoly;
use crate::toric::{path_map_eval, path_monomials, theta_arena, PVector};
use crate::tree::{NodeId, PhyloTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetError {
    #[error("spanning-tree enumeration is limited to 9 vertices, got {0}")]
    TooLarge(usize),
    #[error("expected {expected} edge parameters, got {got}")]
    WrongLength { expected: usize, got: usize },
}

/// `K_{n+1}` with weight `p_ij` on edge `{i,j}`, as a Laplacian.
#[derive(Debug, Clone)]
pub struct WeightedCompleteGraph<T> {
    pub weights: PVector<T>,
}

impl<T: RingElem> WeightedCompleteGraph<T> {
    pub fn num_vertices(&self) -> usize {
        self.weights.n() + 1
    }

    pub fn laplacian(&self) -> Vec<Vec<T>> {
        let v = self.num_vertices();
        let proto = &self.weights.values()[0];
        let mut l = vec![vec![proto.zero_like(); v]; v];
        for i in 0..v {
            for j in 0..v {
                if i != j {
                    let w = self.weights.get(i, j);
                    l[i][j] = w.neg_elem();
                    l[i][i] = l[i][i].add_elem(w);
                }
            }
        }
        l
    }
}

/// Symbolic Laplacian of the tree's `K^T` over the θ arena.
pub fn laplacian(tree: &PhyloTree) -> Vec<Vec<SparsePoly>> {
    let arena = theta_arena(tree);
    WeightedCompleteGraph {
        weights: path_monomials(tree, &arena),
    }
    .laplacian()
}

/// A factor `D_v = Σ_ℓ ∏_{e ∈ v↭ℓ} θ_e` raised to `deg(v) − 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeFactor {
    pub node: NodeId,
    /// Edge sets of the paths from `node` to each leaf, leaf order `0..=n`.
    pub paths: Vec<Vec<usize>>,
    pub exponent: u32,
}

impl NodeFactor {
    pub fn poly(&self, arena: &crate::poly::VarArena) -> SparsePoly {
        let mut s = SparsePoly::zero(arena);
        for p in &self.paths {
            s = &s + &SparsePoly::product_of_vars(arena, p);
        }
        s
    }

    pub fn eval<T: RingElem>(&self, theta: &[T]) -> T {
        let mut total = theta[0].zero_like();
        for p in &self.paths {
            let mut term = theta[0].one_like();
            for &e in p {
                term = term.mul_elem(&theta[e]);
            }
            total = total.add_elem(&term);
        }
        total
    }
}

/// `det K_T(θ) = ∏_e θ_e · ∏_v D_v^{deg(v)−2}` in factored form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetFactorization {
    pub num_edges: usize,
    pub node_factors: Vec<NodeFactor>,
}

impl DetFactorization {
    pub fn new(tree: &PhyloTree) -> Self {
        let node_factors = tree
            .internal_nodes()
            .map(|v| NodeFactor {
                node: v,
                paths: (0..tree.num_leaves())
                    .map(|l| tree.node_path(v, l).0)
                    .collect(),
                exponent: (tree.degree(v) - 2) as u32,
            })
            .collect();
        DetFactorization {
            num_edges: tree.num_edges(),
            node_factors,
        }
    }

    pub fn expand(&self, arena: &crate::poly::VarArena) -> SparsePoly {
        let all: Vec<usize> = (0..self.num_edges).collect();
        let mut out = SparsePoly::product_of_vars(arena, &all);
        for f in &self.node_factors {
            out = &out * &f.poly(arena).pow(f.exponent);
        }
        out
    }

    pub fn eval<T: RingElem>(&self, theta: &[T]) -> T {
        let mut out = theta[0].clone();
        for t in &theta[1..self.num_edges] {
            out = out.mul_elem(t);
        }
        for f in &self.node_factors {
            let d = f.eval(theta);
            for _ in 0..f.exponent {
                out = out.mul_elem(&d);
            }
        }
        out
    }

    /// Total degree in θ: `D_v` has the degree of its longest leaf path.
    pub fn degree(&self) -> usize {
        let node: usize = self
            .node_factors
            .iter()
            .map(|f| f.exponent as usize * f.paths.iter().map(Vec::len).max().unwrap_or(0))
            .sum();
        self.num_edges + node
    }

    /// Renders e.g. `t0*t1*t2*(t0 + t1 + t2)^1`.
    pub fn render(&self, arena: &crate::poly::VarArena) -> String {
        let mut parts: Vec<String> = (0..self.num_edges)
            .map(|e| String::from(arena.name(e)))
            .collect();
        for f in &self.node_factors {
            parts.push(format!("({})^{}", f.poly(arena), f.exponent));
        }
        parts.join("*")
    }
}

impl fmt::Display for DetFactorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arena =
            crate::poly::VarArena::new((0..self.num_edges).map(crate::toric::theta_name)).unwrap();
        f.write_str(&self.render(&arena))
    }
}

pub fn det_k_formula(tree: &PhyloTree) -> DetFactorization {
    DetFactorization::new(tree)
}

/// Determinant of the symbolic `K_T(θ)` by cofactor expansion (`n <= 6`)
/// or fraction-free elimination.
pub fn det_symbolic_k(tree: &PhyloTree) -> SparsePoly {
    let (_, k) = crate::toric::symbolic_k(tree);
    if k.len() <= 6 {
        det_laplace(&k)
    } else {
        det_bareiss(&k)
    }
}

pub fn det_symbolic_k_bareiss(tree: &PhyloTree) -> SparsePoly {
    let (_, k) = crate::toric::symbolic_k(tree);
    det_bareiss(&k)
}

pub fn det_symbolic_k_laplace(tree: &PhyloTree) -> SparsePoly {
    let (_, k) = crate::toric::symbolic_k(tree);
    det_laplace(&k)
}

/// Decodes a Prüfer sequence over `0..v` into its tree's edge list.
pub fn prufer_decode(seq: &[usize], v: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; v];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(v - 1);
    for &x in seq {
        let leaf = (0..v).find(|&u| degree[u] == 1).unwrap();
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..v).filter(|&u| degree[u] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Weighted spanning-tree count of `K_{n+1}` with weights `p_ij = ∏ θ`,
/// enumerating all `(n+1)^{n−1}` Prüfer sequences.
pub fn spanning_tree_oracle(
    tree: &PhyloTree,
    theta: &[BigRational],
) -> Result<BigRational, DetError> {
    let v = tree.num_leaves();
    if v > 9 {
        return Err(DetError::TooLarge(v));
    }
    if theta.len() != tree.num_edges() {
        return Err(DetError::WrongLength {
            expected: tree.num_edges(),
            got: theta.len(),
        });
    }
    let p = path_map_eval(tree, theta).unwrap();
    Ok(spanning_tree_sum(&p))
}

/// Σ over spanning trees of `K_{n+1}` of the product of edge weights.
///
/// Weights are split into integer numerators over a common denominator so
/// the inner loop runs on big integers only.
pub fn spanning_tree_sum(weights: &PVector<BigRational>) -> BigRational {
    let v = weights.n() + 1;
    if v == 2 {
        return weights.values()[0].clone();
    }
    let mut lcm = BigInt::one();
    for w in weights.values() {
        lcm = num_integer::Integer::lcm(&lcm, w.denom());
    }
    let ints: Vec<BigInt> = weights
        .values()
        .iter()
        .map(|w| (w * BigRational::from_integer(lcm.clone())).to_integer())
        .collect();
    let idx = |a: usize, b: usize| crate::toric::pair_index(a, b, v - 1);
    let len = v - 2;
    let mut seq = vec![0usize; len];
    let mut total = BigInt::zero();
    loop {
        let edges = prufer_decode(&seq, v);
        let mut prod = BigInt::one();
        for (a, b) in edges {
            prod *= &ints[idx(a, b)];
        }
        total += prod;
        // odometer increment
        let mut k = 0;
        while k < len {
            seq[k] += 1;
            if seq[k] < v {
                break;
            }
            seq[k] = 0;
            k += 1;
        }
        if k == len {
            break;
        }
    }
    let denom = num_traits::pow(lcm, v - 1);
    BigRational::new(total, denom)
}

/// Evaluates `det K_T(θ)` numerically from the factored form.
pub fn det_k_at(tree: &PhyloTree, theta: &[BigRational]) -> BigRational {
    DetFactorization::new(tree).eval(theta)
}

/// Exponent of `θ_e` dividing each entry: checks that `θ_e | det K_T` by
/// exact division for every edge.
pub fn each_edge_divides(tree: &PhyloTree, det: &SparsePoly) -> bool {
    (0..tree.num_edges()).all(|e| det.exact_div(&det.arena().var(e)).is_ok())
}

/// Counts terms by degree; a cheap fingerprint for diagnostics.
pub fn degree_profile(p: &SparsePoly) -> BTreeMap<u32, usize> {
    let mut out = BTreeMap::new();
    for (m, _) in p.terms() {
        *out.entry(m.degree()).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{integer, rational};
    use crate::toric::symbolic_k;
    use crate::tree::parse_newick;
    use alloc::string::ToString;

    fn fig1() -> PhyloTree {
        parse_newick("((1,2,3),4,0);").unwrap()
    }

    #[test]
    fn laplacian_star2() {
        let s = PhyloTree::star(2).unwrap();
        let l = laplacian(&s);
        let a = theta_arena(&s);
        let t = |i| a.var(i);
        assert_eq!(l[1][1], &(&t(0) * &t(1)) + &(&t(1) * &t(2)));
        for row in &l {
            let mut sum = SparsePoly::zero(&a);
            for x in row {
                sum = &sum + x;
            }
            assert!(sum.is_zero());
        }
    }

    #[test]
    fn laplacian_minor_is_k() {
        let t = fig1();
        let l = laplacian(&t);
        let (_, k) = symbolic_k(&t);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(l[i + 1][j + 1], k[i][j]);
            }
        }
    }

    #[test]
    fn star_formula() {
        let s = PhyloTree::star(2).unwrap();
        let f = det_k_formula(&s);
        assert_eq!(f.to_string(), "t0*t1*t2*(t0 + t1 + t2)^1");
        let one = vec![integer(1); 3];
        assert_eq!(f.eval(&one), integer(3));
    }

    #[test]
    fn fig1_formula_matches_expansion() {
        let t = fig1();
        let f = det_k_formula(&t);
        assert_eq!(f.node_factors.len(), 2);
        assert_eq!(f.node_factors[0].exponent, 2);
        assert_eq!(f.node_factors[1].exponent, 1);
        let a = theta_arena(&t);
        assert_eq!(
            f.node_factors[0].poly(&a).to_string(),
            "t0*t5 + t4*t5 + t1 + t2 + t3"
        );
        assert_eq!(
            f.node_factors[1].poly(&a).to_string(),
            "t1*t5 + t2*t5 + t3*t5 + t0 + t4"
        );
        let d = det_symbolic_k(&t);
        assert_eq!(f.expand(&a), d);
        assert_eq!(det_symbolic_k_bareiss(&t), d);
        assert!(each_edge_divides(&t, &d));
    }

    #[test]
    fn spanning_trees_unit_weights() {
        let s = PhyloTree::star(2).unwrap();
        assert_eq!(
            spanning_tree_oracle(&s, &vec![integer(1); 3]).unwrap(),
            integer(3)
        );
        let s3 = PhyloTree::star(3).unwrap();
        assert_eq!(
            spanning_tree_oracle(&s3, &vec![integer(1); 4]).unwrap(),
            integer(16)
        );
        let big = PhyloTree::star(9).unwrap();
        assert_eq!(
            spanning_tree_oracle(&big, &vec![integer(1); 10]),
            Err(DetError::TooLarge(10))
        );
    }

    #[test]
    fn oracle_matches_formula_fig1() {
        let t = fig1();
        let th: Vec<BigRational> = (0..6).map(|i| rational(2 * i + 1, i + 2)).collect();
        let o = spanning_tree_oracle(&t, &th).unwrap();
        assert_eq!(o, det_k_at(&t, &th));
    }

    #[test]
    fn prufer_round() {
        let edges = prufer_decode(&[3, 3], 4);
        assert_eq!(edges, vec![(0, 3), (1, 3), (2, 3)]);
    }
}

//! Farris coordinates, the path parametrization and the quartet binomials.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;
use thiserror::Error;

use crate::linalg::{rational_rank, RingElem};
use crate::poly::{integer, SparsePoly, VarArena};
use crate::tree::{NodeId, PhyloTree, QuartetTopology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToricError {
    #[error("matrix is not symmetric at ({0},{1})")]
    NotSymmetric(usize, usize),
    #[error("matrix is not square")]
    NotSquare,
    #[error("p-vector has length {got}, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("p-coordinate p{0}{1} vanishes; the fiber description does not apply")]
    ZeroCoordinate(usize, usize),
    #[error("node {0} is not internal")]
    NotInternal(NodeId),
}

pub fn num_pairs(n: usize) -> usize {
    (n + 1) * n / 2
}

/// Position of `{i, j}` (`i != j`, both `<= n`) in lexicographic pair order.
pub fn pair_index(i: usize, j: usize, n: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    debug_assert!(a != b && b <= n);
    // pairs starting with 0..a come first: Σ_{r<a} (n - r)
    a * n - a * a.saturating_sub(1) / 2 + (b - a - 1)
}

/// All pairs `i < j` of `0..=n` in lexicographic order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(num_pairs(n));
    for i in 0..=n {
        for j in i + 1..=n {
            out.push((i, j));
        }
    }
    out
}

/// Name of the variable `p_ij`; a separator is inserted once labels reach 10.
pub fn p_name(i: usize, j: usize, n: usize) -> String {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    if n >= 10 {
        format!("p{a}_{b}")
    } else {
        format!("p{a}{b}")
    }
}

pub fn theta_name(e: usize) -> String {
    format!("t{e}")
}

/// Coordinates indexed by the pairs `{i,j}` of leaves `0..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PVector<T> {
    n: usize,
    values: Vec<T>,
}

impl<T> PVector<T> {
    pub fn new(n: usize, values: Vec<T>) -> Result<Self, ToricError> {
        if values.len() != num_pairs(n) {
            return Err(ToricError::WrongLength {
                expected: num_pairs(n),
                got: values.len(),
            });
        }
        Ok(PVector { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.values[pair_index(i, j, self.n)]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> PVector<U> {
        PVector {
            n: self.n,
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// `p_ij = -k_ij` for `i, j >= 1` and `p_0i = Σ_j k_ij`.
pub fn farris_p_from_k<T: RingElem + PartialEq>(k: &[Vec<T>]) -> Result<PVector<T>, ToricError> {
    let n = k.len();
    if k.iter().any(|r| r.len() != n) || n == 0 {
        return Err(ToricError::NotSquare);
    }
    for i in 0..n {
        for j in i + 1..n {
            if k[i][j] != k[j][i] {
                return Err(ToricError::NotSymmetric(i, j));
            }
        }
    }
    let mut values = Vec::with_capacity(num_pairs(n));
    for (a, b) in pairs(n) {
        if a == 0 {
            let row = &k[b - 1];
            let mut s = row[0].clone();
            for x in &row[1..] {
                s = s.add_elem(x);
            }
            values.push(s);
        } else {
            values.push(k[a - 1][b - 1].neg_elem());
        }
    }
    PVector::new(n, values)
}

/// Inverse of [`farris_p_from_k`]: `k_ii = p_0i + Σ_{j≠i} p_ij`, `k_ij = -p_ij`.
pub fn k_from_p<T: RingElem>(p: &PVector<T>) -> Vec<Vec<T>> {
    let n = p.n;
    let proto = &p.values[0];
    let mut k = vec![vec![proto.zero_like(); n]; n];
    for i in 1..=n {
        let mut diag = p.get(0, i).clone();
        for j in 1..=n {
            if j != i {
                diag = diag.add_elem(p.get(i, j));
                k[i - 1][j - 1] = p.get(i, j).neg_elem();
            }
        }
        k[i - 1][i - 1] = diag;
    }
    k
}

/// Checked form of [`k_from_p`] for raw coordinate slices.
pub fn k_from_p_slice<T: RingElem>(values: &[T], n: usize) -> Result<Vec<Vec<T>>, ToricError> {
    let p = PVector::new(n, values.to_vec())?;
    Ok(k_from_p(&p))
}

/// 0/1 incidence of edges (rows) against leaf pairs (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentMatrix {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
    pub rows: Vec<Vec<u8>>,
}

impl ExponentMatrix {
    pub fn num_edges(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, c: usize) -> Vec<u8> {
        self.rows.iter().map(|r| r[c]).collect()
    }

    pub fn rank(&self) -> usize {
        let m: Vec<Vec<BigRational>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| integer(x as i64)).collect())
            .collect();
        rational_rank(&m)
    }
}

pub fn exponent_matrix(tree: &PhyloTree) -> ExponentMatrix {
    let n = tree.n();
    let ps = pairs(n);
    let mut rows = vec![vec![0u8; ps.len()]; tree.num_edges()];
    for (c, &(i, j)) in ps.iter().enumerate() {
        for &e in tree.path_edges(i, j).unwrap().edges() {
            rows[e][c] = 1;
        }
    }
    ExponentMatrix { n, pairs: ps, rows }
}

/// `p_ij = ∏_{e ∈ i↭j} θ_e` for any ring of values.
pub fn path_map_eval<T: RingElem>(tree: &PhyloTree, theta: &[T]) -> Result<PVector<T>, ToricError> {
    if theta.len() != tree.num_edges() {
        return Err(ToricError::WrongLength {
            expected: tree.num_edges(),
            got: theta.len(),
        });
    }
    let n = tree.n();
    let values = pairs(n)
        .into_iter()
        .map(|(i, j)| {
            let path = tree.path_edges(i, j).unwrap();
            let mut v = theta[path.edges()[0]].clone();
            for &e in &path.edges()[1..] {
                v = v.mul_elem(&theta[e]);
            }
            v
        })
        .collect();
    PVector::new(n, values)
}

/// Arena `t0, …, t{#E-1}` of edge parameters.
pub fn theta_arena(tree: &PhyloTree) -> VarArena {
    VarArena::new((0..tree.num_edges()).map(theta_name)).unwrap()
}

/// Arena of the `p_ij` in lexicographic pair order.
pub fn p_arena(n: usize) -> VarArena {
    VarArena::new(pairs(n).into_iter().map(|(i, j)| p_name(i, j, n))).unwrap()
}

/// The path monomials as polynomials in `arena`, whose first `#E` variables
/// are the edge parameters.
pub fn path_monomials(tree: &PhyloTree, arena: &VarArena) -> PVector<SparsePoly> {
    let theta: Vec<SparsePoly> = (0..tree.num_edges()).map(|e| arena.var(e)).collect();
    path_map_eval(tree, &theta).unwrap()
}

/// `K_T(θ)` as an `n × n` matrix over the θ arena.
pub fn symbolic_k(tree: &PhyloTree) -> (VarArena, Vec<Vec<SparsePoly>>) {
    let arena = theta_arena(tree);
    let k = symbolic_k_in(tree, &arena);
    (arena, k)
}

pub fn symbolic_k_in(tree: &PhyloTree, arena: &VarArena) -> Vec<Vec<SparsePoly>> {
    k_from_p(&path_monomials(tree, arena))
}

/// Quartet binomials generating the toric ideal, over the `p` arena.
///
/// A quartet with cherries `{a,b}|{c,d}` gives `p_ac p_bd − p_ad p_bc`. A
/// quartet inducing a star gives the two binomials `m1 − m2`, `m1 − m3` among
/// `m1 = p_ab p_cd`, `m2 = p_ac p_bd`, `m3 = p_ad p_bc` (`a<b<c<d`).
pub fn toric_generators(tree: &PhyloTree) -> (VarArena, Vec<SparsePoly>) {
    let n = tree.n();
    let arena = p_arena(n);
    let p = |i: usize, j: usize| arena.var(pair_index(i, j, n));
    let prod = |a: (usize, usize), b: (usize, usize)| &p(a.0, a.1) * &p(b.0, b.1);
    let mut gens: Vec<SparsePoly> = Vec::new();
    let leaves = n + 1;
    for a in 0..leaves {
        for b in a + 1..leaves {
            for c in b + 1..leaves {
                for d in c + 1..leaves {
                    match tree.induced_quartet_cherries([a, b, c, d]).unwrap() {
                        QuartetTopology::Split([[i, j], [k, l]]) => {
                            gens.push(&prod((i, k), (j, l)) - &prod((i, l), (j, k)));
                        }
                        QuartetTopology::Star => {
                            let m1 = prod((a, b), (c, d));
                            let m2 = prod((a, c), (b, d));
                            let m3 = prod((a, d), (b, c));
                            gens.push(&m1 - &m2);
                            gens.push(&m1 - &m3);
                        }
                    }
                }
            }
        }
    }
    let mut unique: Vec<SparsePoly> = Vec::with_capacity(gens.len());
    for g in gens {
        if !unique.iter().any(|u| *u == g || *u == -&g) {
            unique.push(g);
        }
    }
    (arena, unique)
}

/// `ε^S` for a subset `S` of internal nodes: `ε_e = (-1)^{#(S ∩ e)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignVector {
    pub subset: Vec<NodeId>,
    pub signs: Vec<i8>,
}

impl SignVector {
    pub fn new(tree: &PhyloTree, subset: &[NodeId]) -> Result<Self, ToricError> {
        for &v in subset {
            if tree.is_leaf(v) || v >= tree.num_nodes() {
                return Err(ToricError::NotInternal(v));
            }
        }
        let signs = tree
            .edges()
            .iter()
            .map(|&(a, b)| {
                let hits = subset.iter().filter(|&&v| v == a || v == b).count();
                if hits % 2 == 0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let mut subset = subset.to_vec();
        subset.sort_unstable();
        Ok(SignVector { subset, signs })
    }

    /// Componentwise product `ε ∗ θ`.
    pub fn apply<T: RingElem>(&self, theta: &[T]) -> Vec<T> {
        theta
            .iter()
            .zip(&self.signs)
            .map(|(t, &s)| if s < 0 { t.neg_elem() } else { t.clone() })
            .collect()
    }
}

/// The `2^{#Int}` sign vectors, indexed by the bitmask of internal nodes
/// (bit `k` ↔ internal node `n+1+k`).
pub fn all_sign_vectors(tree: &PhyloTree) -> Vec<SignVector> {
    let internal: Vec<NodeId> = tree.internal_nodes().collect();
    (0u64..(1u64 << internal.len()))
        .map(|mask| {
            let s: Vec<NodeId> = internal
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            SignVector::new(tree, &s).unwrap()
        })
        .collect()
}

pub fn fiber_size(tree: &PhyloTree) -> u64 {
    1u64 << tree.num_internal()
}

/// The path-map fiber `{ε^S ∗ θ̂}` through `θ̂`.
pub fn fiber<T: RingElem>(tree: &PhyloTree, theta_hat: &[T]) -> Result<Vec<Vec<T>>, ToricError> {
    let p = path_map_eval(tree, theta_hat)?;
    for (k, (i, j)) in pairs(tree.n()).into_iter().enumerate() {
        if p.values[k].is_zero_elem() {
            return Err(ToricError::ZeroCoordinate(i, j));
        }
    }
    Ok(all_sign_vectors(tree)
        .iter()
        .map(|s| s.apply(theta_hat))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::det_laplace;
    use crate::poly::rational;
    use crate::tree::parse_newick;

    fn fig1() -> PhyloTree {
        parse_newick("((1,2,3),4,0);").unwrap()
    }

    #[test]
    fn pair_indexing() {
        for n in 2..8 {
            for (k, (i, j)) in pairs(n).into_iter().enumerate() {
                assert_eq!(pair_index(i, j, n), k);
                assert_eq!(pair_index(j, i, n), k);
            }
        }
    }

    #[test]
    fn farris_examples() {
        let id = vec![vec![integer(1), integer(0)], vec![integer(0), integer(1)]];
        let p = farris_p_from_k(&id).unwrap();
        assert_eq!(p.values(), &[integer(1), integer(1), integer(0)]);
        assert_eq!(k_from_p(&p), id);
        let bad = vec![vec![integer(1), integer(2)], vec![integer(0), integer(1)]];
        assert_eq!(farris_p_from_k(&bad), Err(ToricError::NotSymmetric(0, 1)));
        assert!(matches!(
            k_from_p_slice(&[integer(1)], 2),
            Err(ToricError::WrongLength { .. })
        ));
    }

    #[test]
    fn exponent_matrix_fig1() {
        let a = exponent_matrix(&fig1());
        assert_eq!(a.rows.len(), 6);
        assert_eq!(a.rows[5], vec![1, 1, 1, 0, 0, 0, 1, 0, 1, 1]);
        assert_eq!(a.rank(), 6);
    }

    #[test]
    fn star_path_map() {
        let s = PhyloTree::star(2).unwrap();
        let p = path_map_eval(&s, &[integer(1), integer(2), integer(3)]).unwrap();
        assert_eq!(p.values(), &[integer(2), integer(3), integer(6)]);
        assert!(path_map_eval(&s, &[integer(1)]).is_err());
    }

    #[test]
    fn symbolic_k_star2() {
        let s = PhyloTree::star(2).unwrap();
        let (a, k) = symbolic_k(&s);
        let t = |i| a.var(i);
        assert_eq!(k[0][0], &(&t(0) * &t(1)) + &(&t(1) * &t(2)));
        assert_eq!(k[0][1], -&(&t(1) * &t(2)));
        assert_eq!(k[1][1], &(&t(0) * &t(2)) + &(&t(1) * &t(2)));
        let d = det_laplace(&k);
        let expect = &SparsePoly::product_of_vars(&a, &[0, 1, 2]) * &(&(&t(0) + &t(1)) + &t(2));
        assert_eq!(d, expect);
    }

    #[test]
    fn symbolic_k_fig1_entry() {
        let (a, k) = symbolic_k(&fig1());
        let t = |i| a.var(i);
        let inner = &(&(&t(5) * &(&t(0) + &t(4))) + &t(2)) + &t(3);
        assert_eq!(k[0][0], &t(1) * &inner);
    }

    #[test]
    fn fig1_generators() {
        let (arena, gens) = toric_generators(&fig1());
        assert_eq!(gens.len(), 7);
        let v = |s: &str| arena.var_named(s).unwrap();
        let b = |a: &str, b: &str, c: &str, d: &str| &(&v(a) * &v(b)) - &(&v(c) * &v(d));
        assert!(gens.contains(&b("p01", "p24", "p02", "p14")));
        assert!(gens.contains(&b("p01", "p34", "p03", "p14")));
        assert!(gens.contains(&b("p02", "p34", "p03", "p24")));
        assert!(gens.contains(&b("p12", "p34", "p13", "p24")));
        assert!(gens.contains(&b("p12", "p34", "p23", "p14")));
        // the remaining two listed forms lie in the span of the {0,1,2,3} pair
        let x = b("p02", "p13", "p03", "p12");
        let y = b("p01", "p23", "p03", "p12");
        let g1 = b("p01", "p23", "p02", "p13");
        let g2 = b("p01", "p23", "p03", "p12");
        assert!(gens.contains(&g1) && gens.contains(&g2));
        assert_eq!(x, &g2 - &g1);
        assert_eq!(y, g2);
    }

    #[test]
    fn small_tree_has_no_generators() {
        assert!(toric_generators(&PhyloTree::star(2).unwrap()).1.is_empty());
    }

    #[test]
    fn generators_vanish_on_image() {
        for nw in ["((1,2,3),4,0);", "(1,2,3,4,0);", "(((1,2),3),(4,5),0);"] {
            let t = parse_newick(nw).unwrap();
            let (_, gens) = toric_generators(&t);
            let ta = theta_arena(&t);
            let images = path_monomials(&t, &ta).into_values();
            for g in gens {
                assert!(g.compose(&images).unwrap().is_zero(), "{nw}: {g}");
            }
        }
    }

    #[test]
    fn fibers() {
        let s = PhyloTree::star(2).unwrap();
        let f = fiber(&s, &[integer(1), integer(2), integer(3)]).unwrap();
        assert_eq!(
            f,
            vec![
                vec![integer(1), integer(2), integer(3)],
                vec![integer(-1), integer(-2), integer(-3)]
            ]
        );
        let t = fig1();
        let th: Vec<BigRational> = (0..6).map(|i| rational(i + 2, 3)).collect();
        let f = fiber(&t, &th).unwrap();
        assert_eq!(f.len(), 4);
        let p0 = path_map_eval(&t, &th).unwrap();
        for pt in &f {
            assert_eq!(path_map_eval(&t, pt).unwrap(), p0);
        }
        let mut zero = th.clone();
        zero[5] = integer(0);
        assert!(matches!(
            fiber(&t, &zero),
            Err(ToricError::ZeroCoordinate(..))
        ));
    }
}

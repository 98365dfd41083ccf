//! Sample covariances, the log-likelihood `log det K − tr(SK)` on a tree
//! model, its score equations, and the re-rooting transforms of `K` and `S`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::determinant::DetFactorization;
use crate::linalg::{det_bareiss, RingElem};
use crate::poly::{integer, rational_to_f64, PolySystem, SparsePoly, VarArena};
use crate::toric::{
    fiber_size, num_pairs, pair_index, path_monomials, symbolic_k_in, theta_name, PVector,
    ToricError,
};
use crate::tree::{NodeId, PhyloTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LikelihoodError {
    #[error("no samples")]
    EmptyData,
    #[error("sample {row} has {got} entries, expected {expected}")]
    RaggedData {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("covariance is {got}x{got}, the tree needs {expected}x{expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance matrix is not symmetric at ({0},{1})")]
    NotSymmetric(usize, usize),
    #[error("need n >= 2, got {0}")]
    TooSmall(usize),
    #[error("leaf {0} out of range for re-rooting")]
    RootOutOfRange(usize),
    #[error(transparent)]
    Toric(#[from] ToricError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Data { samples: usize },
    RandomGeneric { seed: u64 },
    Given,
}

/// Symmetric `n × n` matrix `S` with exact rational entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleCovariance {
    entries: Vec<Vec<BigRational>>,
    pub provenance: Provenance,
}

impl SampleCovariance {
    pub fn new(entries: Vec<Vec<BigRational>>) -> Result<Self, LikelihoodError> {
        let n = entries.len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(LikelihoodError::RaggedData {
                    row: i,
                    expected: n,
                    got: row.len(),
                });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if entries[i][j] != entries[j][i] {
                    return Err(LikelihoodError::NotSymmetric(i, j));
                }
            }
        }
        Ok(SampleCovariance {
            entries,
            provenance: Provenance::Given,
        })
    }

    /// Rationalizes a floating matrix exactly.
    pub fn from_f64(entries: &[Vec<f64>]) -> Result<Self, LikelihoodError> {
        let q = entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&x| BigRational::from_float(x).unwrap_or_else(BigRational::zero))
                    .collect()
            })
            .collect();
        Self::new(q)
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// Entry `s_ij` with 1-based leaf labels.
    pub fn s(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i - 1][j - 1]
    }

    pub fn entries(&self) -> &[Vec<BigRational>] {
        &self.entries
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|r| r.iter().map(rational_to_f64).collect())
            .collect()
    }

    pub fn determinant(&self) -> BigRational {
        det_bareiss(&self.entries)
    }

    fn check_dim(&self, n: usize) -> Result<(), LikelihoodError> {
        if self.n() != n {
            Err(LikelihoodError::DimensionMismatch {
                expected: n,
                got: self.n(),
            })
        } else {
            Ok(())
        }
    }
}

/// `S = (1/m) Σ u uᵀ` over the rows `u` of `data`.
pub fn sample_covariance(data: &[Vec<BigRational>]) -> Result<SampleCovariance, LikelihoodError> {
    let m = data.len();
    if m == 0 {
        return Err(LikelihoodError::EmptyData);
    }
    let n = data[0].len();
    if n == 0 {
        return Err(LikelihoodError::EmptyData);
    }
    let mut s = vec![vec![BigRational::zero(); n]; n];
    for (r, u) in data.iter().enumerate() {
        if u.len() != n {
            return Err(LikelihoodError::RaggedData {
                row: r,
                expected: n,
                got: u.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                s[i][j] += &u[i] * &u[j];
            }
        }
    }
    let inv = BigRational::new(BigInt::one(), BigInt::from(m));
    for row in s.iter_mut() {
        for x in row.iter_mut() {
            *x *= &inv;
        }
    }
    let mut out = SampleCovariance::new(s)?;
    out.provenance = Provenance::Data { samples: m };
    Ok(out)
}

/// `S = W Wᵀ` with `W` an `n × (n+2)` matrix of uniform integers in
/// `[-10, 10]`, redrawn until `det S ≠ 0`.
pub fn random_generic_s(n: usize, seed: u64) -> Result<SampleCovariance, LikelihoodError> {
    if n < 2 {
        return Err(LikelihoodError::TooSmall(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let w: Vec<Vec<i64>> = (0..n)
            .map(|_| (0..n + 2).map(|_| rng.random_range(-10i64..=10)).collect())
            .collect();
        let s: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| integer((0..n + 2).map(|k| w[i][k] * w[j][k]).sum()))
                    .collect()
            })
            .collect();
        let mut out = SampleCovariance::new(s)?;
        if !out.determinant().is_zero() {
            out.provenance = Provenance::RandomGeneric { seed };
            return Ok(out);
        }
    }
}

/// `Σ_{i,j} s_ij k_ij` for any matrix `k` over a ring containing the
/// rationals through `lift`.
fn trace_with<T: RingElem>(
    s: &SampleCovariance,
    k: &[Vec<T>],
    lift: impl Fn(&BigRational) -> T,
) -> T {
    let n = s.n();
    let mut total = k[0][0].zero_like();
    for i in 0..n {
        for j in 0..n {
            if !s.entries[i][j].is_zero() {
                total = total.add_elem(&lift(&s.entries[i][j]).mul_elem(&k[i][j]));
            }
        }
    }
    total
}

/// The two pieces of the log-likelihood: the factored determinant and
/// `tr(S K_T(θ))` as a polynomial in θ.
#[derive(Debug, Clone)]
pub struct LogLikTerms {
    pub det: DetFactorization,
    pub trace: SparsePoly,
}

pub fn loglik_terms(
    tree: &PhyloTree,
    s: &SampleCovariance,
) -> Result<LogLikTerms, LikelihoodError> {
    s.check_dim(tree.n())?;
    let arena = crate::toric::theta_arena(tree);
    Ok(LogLikTerms {
        det: DetFactorization::new(tree),
        trace: trace_poly(tree, s, &arena),
    })
}

/// `tr(S K_T(θ))` in an arena whose first `#E` variables are θ.
pub fn trace_poly(tree: &PhyloTree, s: &SampleCovariance, arena: &VarArena) -> SparsePoly {
    let k = symbolic_k_in(tree, arena);
    trace_with(s, &k, |q| SparsePoly::constant(arena, q.clone()))
}

pub fn s_name(i: usize, j: usize, n: usize) -> String {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    if n >= 10 {
        format!("s{a}_{b}")
    } else {
        format!("s{a}{b}")
    }
}

/// Arena `t0.. , s11, s12, …, snn` and the fully symbolic `tr(SK)`.
pub fn trace_symbolic(tree: &PhyloTree) -> (VarArena, SparsePoly) {
    let n = tree.n();
    let mut names: Vec<String> = (0..tree.num_edges()).map(theta_name).collect();
    for i in 1..=n {
        for j in i..=n {
            names.push(s_name(i, j, n));
        }
    }
    let arena = VarArena::new(names).unwrap();
    let k = symbolic_k_in(tree, &arena);
    let mut total = SparsePoly::zero(&arena);
    for i in 1..=n {
        for j in 1..=n {
            let sv = arena.var_named(&s_name(i, j, n)).unwrap();
            total = &total + &(&sv * &k[i - 1][j - 1]);
        }
    }
    (arena, total)
}

/// Coefficients `c_ij` of the star trace `Σ_{i<j} c_ij θ_i θ_j`:
/// `c_0j = s_jj` and `c_ij = s_ii + s_jj − 2 s_ij`. Indexed by leaf pair.
pub fn star_trace_coefficients(s: &SampleCovariance) -> PVector<BigRational> {
    let n = s.n();
    let values = crate::toric::pairs(n)
        .into_iter()
        .map(|(i, j)| {
            if i == 0 {
                s.s(j, j).clone()
            } else {
                s.s(i, i) + s.s(j, j) - integer(2) * s.s(i, j)
            }
        })
        .collect();
    PVector::new(n, values).unwrap()
}

/// How the rational score equations are turned into polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    /// θ and one ψ for `Σθ`; the quadratic star system.
    Star,
    /// θ and one reciprocal `ψ_v = 1/D_v` per internal node.
    Aux,
    /// θ only, every equation multiplied by `θ_e ∏_v D_v`.
    Cleared,
}

/// A square polynomial system for the critical points of ℓ.
#[derive(Debug, Clone)]
pub struct ScoreSystem {
    pub system: PolySystem,
    pub mode: ScoreMode,
    pub num_edges: usize,
    /// `(node, variable index)` of each auxiliary reciprocal.
    pub aux: Vec<(NodeId, usize)>,
    /// Factors of `det K` whose zeros are not critical points, in the system
    /// arena: every `θ_e`, then every `D_v`.
    pub divisors: Vec<SparsePoly>,
    pub fiber_size: u64,
}

impl ScoreSystem {
    pub fn arena(&self) -> &VarArena {
        self.system.arena()
    }

    pub fn num_unknowns(&self) -> usize {
        self.system.arena().len()
    }

    pub fn bezout_number(&self) -> u128 {
        self.system.bezout_number()
    }

    /// Smallest `|divisor(x)|` relative to the divisor's natural magnitude.
    pub fn min_divisor(&self, x: &[Complex64]) -> f64 {
        self.divisors
            .iter()
            .map(|d| {
                let c = d.compile();
                c.eval(x).norm() / (1e-300 + c.magnitude(x))
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// The ψ-form star system: `f_i = 1 + θ_i((n−1)ψ − Σ_{j≠i} c_ij θ_j)` for
/// `i = 0..n` and `f_{n+1} = 1 − ψ Σ θ_i`.
pub fn score_system_star(n: usize, s: &SampleCovariance) -> Result<ScoreSystem, LikelihoodError> {
    if n < 2 {
        return Err(LikelihoodError::TooSmall(n));
    }
    s.check_dim(n)?;
    let mut names: Vec<String> = (0..=n).map(theta_name).collect();
    names.push(String::from("psi"));
    let arena = VarArena::new(names).unwrap();
    let psi = arena.var(n + 1);
    let c = star_trace_coefficients(s);
    let one = SparsePoly::one(&arena);
    let mut eqs = Vec::with_capacity(n + 2);
    for i in 0..=n {
        let mut inner = psi.scale(&integer(n as i64 - 1));
        for j in 0..=n {
            if j != i {
                inner = &inner - &arena.var(j).scale(c.get(i, j));
            }
        }
        eqs.push(&one + &(&arena.var(i) * &inner));
    }
    let mut sum = SparsePoly::zero(&arena);
    for i in 0..=n {
        sum = &sum + &arena.var(i);
    }
    eqs.push(&one - &(&psi * &sum));
    let mut divisors: Vec<SparsePoly> = (0..=n).map(|i| arena.var(i)).collect();
    divisors.push(sum);
    Ok(ScoreSystem {
        system: PolySystem::from_equations(&arena, eqs).unwrap(),
        mode: ScoreMode::Star,
        num_edges: n + 1,
        aux: vec![(n + 1, n + 1)],
        divisors,
        fiber_size: 2,
    })
}

struct ScoreParts {
    arena: VarArena,
    d: Vec<SparsePoly>,
    exps: Vec<u32>,
    trace: SparsePoly,
}

fn score_parts(tree: &PhyloTree, s: &SampleCovariance, extra: Vec<String>) -> ScoreParts {
    let mut names: Vec<String> = (0..tree.num_edges()).map(theta_name).collect();
    names.extend(extra);
    let arena = VarArena::new(names).unwrap();
    let det = DetFactorization::new(tree);
    let d = det.node_factors.iter().map(|f| f.poly(&arena)).collect();
    let exps = det.node_factors.iter().map(|f| f.exponent).collect();
    let trace = trace_poly(tree, s, &arena);
    ScoreParts {
        arena,
        d,
        exps,
        trace,
    }
}

/// Score equations with one reciprocal variable per internal node:
/// `1 + θ_e(Σ_v (deg v − 2) ψ_v ∂_e D_v − ∂_e tr(SK))` and `1 − ψ_v D_v`.
pub fn score_system_aux(
    tree: &PhyloTree,
    s: &SampleCovariance,
) -> Result<ScoreSystem, LikelihoodError> {
    s.check_dim(tree.n())?;
    let internal: Vec<NodeId> = tree.internal_nodes().collect();
    let extra = internal.iter().map(|v| format!("psi{v}")).collect();
    let parts = score_parts(tree, s, extra);
    let arena = &parts.arena;
    let ne = tree.num_edges();
    let one = SparsePoly::one(arena);
    let mut eqs = Vec::with_capacity(ne + internal.len());
    for e in 0..ne {
        let mut inner = -&parts.trace.diff(e).unwrap();
        for (k, dv) in parts.d.iter().enumerate() {
            let term = &arena.var(ne + k) * &dv.diff(e).unwrap();
            inner = &inner + &term.scale(&integer(parts.exps[k] as i64));
        }
        eqs.push(&one + &(&arena.var(e) * &inner));
    }
    for (k, dv) in parts.d.iter().enumerate() {
        eqs.push(&one - &(&arena.var(ne + k) * dv));
    }
    let mut divisors: Vec<SparsePoly> = (0..ne).map(|e| arena.var(e)).collect();
    divisors.extend(parts.d.iter().cloned());
    Ok(ScoreSystem {
        system: PolySystem::from_equations(arena, eqs).unwrap(),
        mode: ScoreMode::Aux,
        num_edges: ne,
        aux: internal
            .iter()
            .enumerate()
            .map(|(k, &v)| (v, ne + k))
            .collect(),
        divisors,
        fiber_size: fiber_size(tree),
    })
}

/// Score equations in θ alone, each multiplied through by `θ_e ∏_v D_v`.
pub fn score_system_general(
    tree: &PhyloTree,
    s: &SampleCovariance,
) -> Result<ScoreSystem, LikelihoodError> {
    s.check_dim(tree.n())?;
    let parts = score_parts(tree, s, Vec::new());
    let arena = &parts.arena;
    let ne = tree.num_edges();
    let mut prod_all = SparsePoly::one(arena);
    for dv in &parts.d {
        prod_all = &prod_all * dv;
    }
    let mut eqs = Vec::with_capacity(ne);
    for e in 0..ne {
        let te = arena.var(e);
        let mut eq = prod_all.clone();
        for (k, dv) in parts.d.iter().enumerate() {
            let mut others = SparsePoly::one(arena);
            for (w, dw) in parts.d.iter().enumerate() {
                if w != k {
                    others = &others * dw;
                }
            }
            let term = &(&te * &dv.diff(e).unwrap()) * &others;
            eq = &eq + &term.scale(&integer(parts.exps[k] as i64));
        }
        let tr = &(&te * &parts.trace.diff(e).unwrap()) * &prod_all;
        eqs.push(&eq - &tr);
    }
    let mut divisors: Vec<SparsePoly> = (0..ne).map(|e| arena.var(e)).collect();
    divisors.extend(parts.d.iter().cloned());
    Ok(ScoreSystem {
        system: PolySystem::from_equations(arena, eqs).unwrap(),
        mode: ScoreMode::Cleared,
        num_edges: ne,
        aux: Vec::new(),
        divisors,
        fiber_size: fiber_size(tree),
    })
}

/// Builds the score system in the requested form; `Star` requires a star.
pub fn score_system(
    tree: &PhyloTree,
    s: &SampleCovariance,
    mode: ScoreMode,
) -> Result<ScoreSystem, LikelihoodError> {
    match mode {
        ScoreMode::Star if tree.is_star() => score_system_star(tree.n(), s),
        ScoreMode::Star | ScoreMode::Aux => score_system_aux(tree, s),
        ScoreMode::Cleared => score_system_general(tree, s),
    }
}

/// Gradient of ℓ in θ from the determinant formula:
/// `1/θ_e + Σ_v (deg v − 2) ∂_e D_v / D_v − ∂_e tr(SK)`.
pub fn loglik_gradient(
    tree: &PhyloTree,
    s: &SampleCovariance,
    theta: &[Complex64],
) -> Vec<Complex64> {
    let t = loglik_terms(tree, s).unwrap();
    let arena = t.trace.arena().clone();
    let d: Vec<SparsePoly> = t.det.node_factors.iter().map(|f| f.poly(&arena)).collect();
    (0..tree.num_edges())
        .map(|e| {
            let mut g = theta[e].inv() - t.trace.diff(e).unwrap().eval_complex(theta).unwrap();
            for (k, dv) in d.iter().enumerate() {
                let num = dv.diff(e).unwrap().eval_complex(theta).unwrap();
                let den = dv.eval_complex(theta).unwrap();
                g += num / den * (t.det.node_factors[k].exponent as f64);
            }
            g
        })
        .collect()
}

/// ℓ(θ) = log det K_T(θ) − tr(S K_T(θ)) for real θ with `K` positive
/// definite, from a direct numerical determinant.
pub fn loglik_value(tree: &PhyloTree, s: &SampleCovariance, theta: &[f64]) -> Option<f64> {
    loglik_at_k(&k_numeric(tree, theta), s)
}

/// `log det K − tr(SK)` for a positive definite `K`.
pub fn loglik_at_k(k: &[Vec<f64>], s: &SampleCovariance) -> Option<f64> {
    let l = crate::linalg::cholesky(k, 0.0)?;
    let logdet: f64 = (0..k.len()).map(|i| 2.0 * libm::log(l[i][i])).sum();
    let sf = s.to_f64();
    let mut tr = 0.0;
    for i in 0..k.len() {
        for j in 0..k.len() {
            tr += sf[i][j] * k[j][i];
        }
    }
    Some(logdet - tr)
}

/// `K_T(θ)` at a real point.
pub fn k_numeric(tree: &PhyloTree, theta: &[f64]) -> Vec<Vec<f64>> {
    let p = p_numeric(tree, theta);
    k_from_p_f64(&p, tree.n())
}

pub fn p_numeric(tree: &PhyloTree, theta: &[f64]) -> Vec<f64> {
    crate::toric::pairs(tree.n())
        .into_iter()
        .map(|(i, j)| {
            tree.path_edges(i, j)
                .unwrap()
                .edges()
                .iter()
                .map(|&e| theta[e])
                .product()
        })
        .collect()
}

/// Path products at a complex point, in lexicographic pair order.
pub fn p_complex(tree: &PhyloTree, theta: &[Complex64]) -> Vec<Complex64> {
    crate::toric::pairs(tree.n())
        .into_iter()
        .map(|(i, j)| {
            tree.path_edges(i, j)
                .unwrap()
                .edges()
                .iter()
                .map(|&e| theta[e])
                .product()
        })
        .collect()
}

pub fn k_from_p_f64(p: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut k = vec![vec![0.0; n]; n];
    for i in 1..=n {
        let mut diag = p[pair_index(0, i, n)];
        for j in 1..=n {
            if j != i {
                let v = p[pair_index(i, j, n)];
                diag += v;
                k[i - 1][j - 1] = -v;
            }
        }
        k[i - 1][i - 1] = diag;
    }
    k
}

/// `S′` for the tree re-rooted at leaf `r`:
/// `s′_rr = s_rr`, `s′_rj = s_rr − s_rj`, `s′_ii = s_rr + s_ii − 2 s_ri`,
/// `s′_ij = s_rr − s_ri − s_rj + s_ij`.
pub fn reroot_covariance(
    s: &SampleCovariance,
    r: usize,
) -> Result<SampleCovariance, LikelihoodError> {
    let n = s.n();
    if r == 0 || r > n {
        return Err(LikelihoodError::RootOutOfRange(r));
    }
    let two = integer(2);
    let mut out = vec![vec![BigRational::zero(); n]; n];
    for i in 1..=n {
        for j in 1..=n {
            out[i - 1][j - 1] = if i == r && j == r {
                s.s(r, r).clone()
            } else if i == r {
                s.s(r, r) - s.s(r, j)
            } else if j == r {
                s.s(r, r) - s.s(r, i)
            } else if i == j {
                s.s(r, r) + s.s(i, i) - &two * s.s(r, i)
            } else {
                s.s(r, r) - s.s(r, i) - s.s(r, j) + s.s(i, j)
            };
        }
    }
    let mut res = SampleCovariance::new(out)?;
    res.provenance = s.provenance.clone();
    Ok(res)
}

/// `K′` from the p-coordinates of `K`, with leaf order `1,…,r−1,0,r+1,…,n`:
/// `k′_rr = Σ_t p_0t`, `k′_rj = −p_0j`, `k′_ii = Σ_{t≠i} p_it`, `k′_ij = −p_ij`.
pub fn reroot_concentration<T: RingElem>(
    p: &PVector<T>,
    r: usize,
) -> Result<Vec<Vec<T>>, LikelihoodError> {
    let n = p.n();
    if r == 0 || r > n {
        return Err(LikelihoodError::RootOutOfRange(r));
    }
    if p.values().len() != num_pairs(n) {
        return Err(ToricError::WrongLength {
            expected: num_pairs(n),
            got: p.values().len(),
        }
        .into());
    }
    // position r of K′ stands for the old root leaf 0
    let label = |i: usize| if i == r { 0 } else { i };
    let proto = &p.values()[0];
    let mut k = vec![vec![proto.zero_like(); n]; n];
    for i in 1..=n {
        for j in 1..=n {
            let (a, b) = (label(i), label(j));
            k[i - 1][j - 1] = if i == j {
                let mut sum = proto.zero_like();
                for t in 0..=n {
                    if t != a {
                        sum = sum.add_elem(p.get(a, t));
                    }
                }
                sum
            } else {
                p.get(a, b).neg_elem()
            };
        }
    }
    Ok(k)
}

/// Path monomials of the re-rooted tree, as a p-vector in the original
/// tree's θ arena (edge indices of the original tree).
pub fn rerooted_path_monomials(
    tree: &PhyloTree,
    r: usize,
    arena: &VarArena,
) -> PVector<SparsePoly> {
    let rr = tree.reroot(r).unwrap();
    // edge indices of the rerooted tree map back through the swap 0 ↔ r
    let inverse: Vec<usize> = {
        let mut inv = vec![0; rr.edge_permutation.len()];
        for (old, &new) in rr.edge_permutation.iter().enumerate() {
            inv[new] = old;
        }
        inv
    };
    let images: Vec<SparsePoly> = inverse.iter().map(|&old| arena.var(old)).collect();
    let ta = crate::toric::theta_arena(&rr.tree);
    path_monomials(&rr.tree, &ta).map(|m| m.compose(&images).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rational;
    use crate::toric::{farris_p_from_k, k_from_p, symbolic_k};
    use crate::tree::parse_newick;
    use alloc::string::ToString;

    fn q(v: &[&[i64]]) -> Vec<Vec<BigRational>> {
        v.iter()
            .map(|r| r.iter().map(|&x| integer(x)).collect())
            .collect()
    }

    #[test]
    fn covariance_from_samples() {
        let s = sample_covariance(&q(&[&[1, 0]])).unwrap();
        assert_eq!(s.entries(), q(&[&[1, 0], &[0, 0]]).as_slice());
        let s = sample_covariance(&q(&[&[1, 0], &[0, 1]])).unwrap();
        assert_eq!(s.entries()[0][0], rational(1, 2));
        assert_eq!(s.entries()[0][1], integer(0));
        assert_eq!(sample_covariance(&[]), Err(LikelihoodError::EmptyData));
    }

    #[test]
    fn generic_covariance_is_deterministic() {
        let a = random_generic_s(4, 7).unwrap();
        assert_eq!(a, random_generic_s(4, 7).unwrap());
        assert_ne!(a, random_generic_s(4, 8).unwrap());
        assert!(!a.determinant().is_zero());
        assert!(crate::linalg::cholesky(&a.to_f64(), 1e-12).is_some());
    }

    #[test]
    fn star_trace_matches_coefficients() {
        for n in 2..=5 {
            let t = PhyloTree::star(n).unwrap();
            let s = random_generic_s(n, 3).unwrap();
            let terms = loglik_terms(&t, &s).unwrap();
            let arena = terms.trace.arena().clone();
            let c = star_trace_coefficients(&s);
            let mut expect = SparsePoly::zero(&arena);
            for (i, j) in crate::toric::pairs(n) {
                expect = &expect + &(&arena.var(i) * &arena.var(j)).scale(c.get(i, j));
            }
            assert_eq!(terms.trace, expect);
        }
    }

    #[test]
    fn fig1_trace_terms() {
        let t = parse_newick("((1,2,3),4,0);").unwrap();
        let (arena, tr) = trace_symbolic(&t);
        let v = |s: &str| arena.var_named(s).unwrap();
        let m = &(&v("s12") * &v("t1")) * &v("t2");
        // −2 s12 k12 with k12 = −θ1θ2
        assert_eq!(tr.coefficient(m.terms().next().unwrap().0), integer(-2));
        let inner = &(&(&v("t5") * &(&v("t0") + &v("t4"))) + &v("t2")) + &v("t3");
        let k11 = &v("t1") * &inner;
        let s11_part = &v("s11") * &k11;
        for (mono, c) in s11_part.terms() {
            assert_eq!(&tr.coefficient(mono), c);
        }
    }

    #[test]
    fn star_system_shape() {
        let s = random_generic_s(2, 1).unwrap();
        let sys = score_system_star(2, &s).unwrap();
        assert_eq!(sys.system.len(), 4);
        assert_eq!(sys.system.degrees(), vec![2, 2, 2, 2]);
        for i in 0..=2 {
            let f = sys.system.equations()[i]
                .substitute_value(i, &integer(0))
                .unwrap();
            assert_eq!(f, SparsePoly::one(sys.arena()));
        }
        let h = sys.system.homogenize("z").unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h.arena().len(), 5);
        assert!(h
            .equations()
            .iter()
            .all(|e| e.is_homogeneous() && e.total_degree() == 2));
        assert!(score_system_star(1, &s).is_err());
    }

    #[test]
    fn aux_form_of_star_is_star_form() {
        let n = 3;
        let t = PhyloTree::star(n).unwrap();
        let s = random_generic_s(n, 11).unwrap();
        let a = score_system_aux(&t, &s).unwrap();
        let b = score_system_star(n, &s).unwrap();
        for (x, y) in a.system.equations().iter().zip(b.system.equations()) {
            assert_eq!(x.to_string().replace("psi4", "psi"), y.to_string());
        }
    }

    #[test]
    fn reroot_covariance_example() {
        let id = SampleCovariance::new(q(&[&[1, 0], &[0, 1]])).unwrap();
        let s2 = reroot_covariance(&id, 1).unwrap();
        assert_eq!(s2.entries(), q(&[&[1, 1], &[1, 2]]).as_slice());
        let s = random_generic_s(4, 5).unwrap();
        for r in 1..=4 {
            let sp = reroot_covariance(&s, r).unwrap();
            assert_eq!(sp.s(r, r), s.s(r, r));
            assert_eq!(reroot_covariance(&sp, r).unwrap(), s);
        }
        assert!(reroot_covariance(&s, 0).is_err());
        assert!(reroot_covariance(&s, 5).is_err());
    }

    #[test]
    fn reroot_concentration_matches_rerooted_tree() {
        let t = parse_newick("((1,2,3),4,0);").unwrap();
        let (arena, k) = symbolic_k(&t);
        let p = farris_p_from_k(&k).unwrap();
        for r in 1..=4 {
            let kp = reroot_concentration(&p, r).unwrap();
            let expect = k_from_p(&rerooted_path_monomials(&t, r, &arena));
            assert_eq!(kp, expect, "r = {r}");
            let back = reroot_concentration(&farris_p_from_k(&kp).unwrap(), r).unwrap();
            assert_eq!(back, k);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = parse_newick("((1,2,3),4,0);").unwrap();
        let s = random_generic_s(4, 2).unwrap();
        let th: Vec<f64> = vec![0.7, 1.3, 0.4, 0.9, 1.1, 0.6];
        let g = loglik_gradient(
            &t,
            &s,
            &th.iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect::<Vec<_>>(),
        );
        let h = 1e-6;
        for e in 0..6 {
            let mut a = th.clone();
            let mut b = th.clone();
            a[e] += h;
            b[e] -= h;
            let fd =
                (loglik_value(&t, &s, &a).unwrap() - loglik_value(&t, &s, &b).unwrap()) / (2.0 * h);
            assert!(
                (fd - g[e].re).abs() <= 1e-6 * fd.abs().max(1.0),
                "edge {e}: {fd} vs {}",
                g[e]
            );
        }
    }
}

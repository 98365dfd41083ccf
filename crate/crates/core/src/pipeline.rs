//! End-to-end computations: ML-degrees, MLEs, toric degrees and the
//! re-rooting and star-formula checks built on them.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::catalog::star_ml_degree;
use crate::homotopy::{solve, SolutionSet, SolverError, SolverOptions};
use crate::likelihood::{
    k_from_p_f64, loglik_at_k, loglik_gradient, p_complex, random_generic_s, score_system,
    LikelihoodError, SampleCovariance, ScoreMode, ScoreSystem,
};
use crate::linalg::{cholesky, spd_inverse};
use crate::poly::{integer, PolyError, PolySystem, SparsePoly};
use crate::toric::{fiber_size, pair_index, path_monomials, theta_arena};
use crate::tree::{PhyloTree, TreeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("invalid run: {reason}")]
    Invalid {
        reason: Invalidity,
        report: Box<MLDegreeReport>,
    },
    #[error("tree has {edges} edges, above the toric-degree limit {limit}")]
    TooManyEdges { edges: usize, limit: usize },
    #[error("ML-degree differs across rootings: {0:?}")]
    RerootMismatch(Vec<(usize, u64)>),
    #[error("star formula mismatch for n in {0:?}")]
    StarMismatch(Vec<StarRow>),
    #[error("sample covariance is not positive definite")]
    CovarianceNotPd,
}

/// Why a run's counts cannot be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invalidity {
    NotDivisible { raw: u64, fiber: u64 },
    FailedPaths(u64),
}

impl fmt::Display for Invalidity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Invalidity::NotDivisible { raw, fiber } => {
                write!(
                    f,
                    "raw count {raw} is not divisible by the fiber size {fiber}"
                )
            }
            Invalidity::FailedPaths(k) => write!(f, "{k} paths failed after a re-run"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub solver: SolverOptions,
    /// `None` picks the star system for stars and the auxiliary form
    /// otherwise.
    pub mode: Option<ScoreMode>,
    pub toric_max_edges: usize,
    /// Relative bound on imaginary parts for a critical point to count as real.
    pub real_tol: f64,
    /// Cholesky pivot tolerance for positive definiteness.
    pub pd_tol: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            solver: SolverOptions::default(),
            mode: None,
            toric_max_edges: 8,
            real_tol: 1e-8,
            pd_tol: 1e-10,
        }
    }
}

impl PipelineOptions {
    fn mode_for(&self, tree: &PhyloTree) -> ScoreMode {
        self.mode.unwrap_or(if tree.is_star() {
            ScoreMode::Star
        } else {
            ScoreMode::Aux
        })
    }

    fn solver_for(&self, seed: u64) -> SolverOptions {
        SolverOptions {
            seed: gamma_seed(seed),
            ..self.solver.clone()
        }
    }
}

/// Seed for the homotopy, decorrelated from the seed that draws `S`.
fn gamma_seed(seed: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x6a09_e667_f3bc_c909
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    /// θ coordinates of the cluster representative.
    pub point: Vec<Complex64>,
    pub multiplicity: u64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MLDegreeReport {
    /// Canonical Newick.
    pub tree: String,
    pub seed: u64,
    pub mode: ScoreMode,
    pub fiber_size: u64,
    /// Torus solutions with multiplicity.
    pub raw_count: u64,
    pub mld: u64,
    pub total_paths: u64,
    pub converged: u64,
    pub diverged: u64,
    pub failed: u64,
    pub reruns: u32,
    /// Converged paths whose endpoint zeroes a factor of `det K`.
    pub filtered_divisor: u64,
    pub clusters: Vec<ClusterReport>,
    pub max_residual: f64,
    /// Clusters reached by more than one path.
    pub multiple_clusters: usize,
    pub wall_time_s: Option<f64>,
}

fn summarize(
    tree: &PhyloTree,
    seed: u64,
    sys: &ScoreSystem,
    sol: &SolutionSet,
    tol: f64,
) -> MLDegreeReport {
    let mut clusters = Vec::new();
    let mut filtered = 0;
    for c in &sol.clusters {
        if sys.min_divisor(&c.point) < tol {
            filtered += c.multiplicity as u64;
            continue;
        }
        clusters.push(ClusterReport {
            point: c.point[..sys.num_edges].to_vec(),
            multiplicity: c.multiplicity as u64,
            residual: c.max_residual,
        });
    }
    let raw: u64 = clusters.iter().map(|c| c.multiplicity).sum();
    MLDegreeReport {
        tree: tree.canonical().to_newick(),
        seed,
        mode: sys.mode,
        fiber_size: sys.fiber_size,
        raw_count: raw,
        mld: raw / sys.fiber_size,
        total_paths: sol.total_paths,
        converged: sol.converged,
        diverged: sol.diverged,
        failed: sol.failed,
        reruns: sol.reruns,
        filtered_divisor: filtered,
        max_residual: clusters.iter().map(|c| c.residual).fold(0.0, f64::max),
        multiple_clusters: clusters.iter().filter(|c| c.multiplicity > 1).count(),
        clusters,
        wall_time_s: None,
    }
}

fn validate(report: MLDegreeReport) -> Result<MLDegreeReport, PipelineError> {
    let reason = if report.failed > 0 {
        Some(Invalidity::FailedPaths(report.failed))
    } else if !report.raw_count.is_multiple_of(report.fiber_size) {
        Some(Invalidity::NotDivisible {
            raw: report.raw_count,
            fiber: report.fiber_size,
        })
    } else {
        None
    };
    match reason {
        Some(reason) => Err(PipelineError::Invalid {
            reason,
            report: Box::new(report),
        }),
        None => Ok(report),
    }
}

/// ML-degree of the model at the generic covariance drawn from `seed`.
pub fn ml_degree(
    tree: &PhyloTree,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<MLDegreeReport, PipelineError> {
    let s = random_generic_s(tree.n(), seed)?;
    ml_degree_with(tree, &s, seed, opts)
}

/// Critical-point count for a given `S`; `S` should be generic.
pub fn ml_degree_with(
    tree: &PhyloTree,
    s: &SampleCovariance,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<MLDegreeReport, PipelineError> {
    let sys = score_system(tree, s, opts.mode_for(tree))?;
    let sol = solve(&sys.system, &opts.solver_for(seed))?;
    validate(summarize(tree, seed, &sys, &sol, opts.solver.tol_cluster))
}

/// Whether the reported θ-clusters are closed under every fiber sign flip.
pub fn fiber_closed(tree: &PhyloTree, report: &MLDegreeReport, tol: f64) -> bool {
    let signs = crate::toric::all_sign_vectors(tree);
    report.clusters.iter().all(|c| {
        signs.iter().all(|sv| {
            let flipped = sv.apply(&c.point);
            report
                .clusters
                .iter()
                .any(|d| close(&d.point, &flipped, tol))
        })
    })
}

fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    let scale = 1.0 + b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.iter().zip(b).all(|(u, v)| (u - v).norm() <= tol * scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    /// One θ in the fiber; edges may be purely imaginary when `K` is real.
    pub theta: Vec<Complex64>,
    /// Farris coordinates, in lexicographic pair order.
    pub p: Vec<f64>,
    pub k: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub loglik: f64,
    /// `max_e |θ_e ∂ℓ/∂θ_e|` at the returned point.
    pub score_residual: f64,
    pub pd_certified: bool,
    /// Distinct real positive-definite critical points, fiber collapsed.
    pub real_pd_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MleOutcome {
    Found(MleResult),
    /// No real critical point with `K` positive definite; the counts say
    /// how many complex and real critical points were seen.
    NotFound {
        critical_points: usize,
        real_points: usize,
    },
}

impl MleOutcome {
    pub fn found(&self) -> Option<&MleResult> {
        match self {
            MleOutcome::Found(r) => Some(r),
            MleOutcome::NotFound { .. } => None,
        }
    }
}

/// The maximizer of ℓ among the real critical points with `K` positive
/// definite.
pub fn mle(
    tree: &PhyloTree,
    s: &SampleCovariance,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<MleOutcome, PipelineError> {
    if cholesky(&s.to_f64(), opts.pd_tol).is_none() {
        return Err(PipelineError::CovarianceNotPd);
    }
    let sys = score_system(tree, s, opts.mode_for(tree))?;
    let sol = solve(&sys.system, &opts.solver_for(seed))?;
    let report = summarize(tree, seed, &sys, &sol, opts.solver.tol_cluster);
    let mut real_points = 0;
    // (θ, p, ℓ) per distinct p
    let mut candidates: Vec<(Vec<Complex64>, Vec<f64>, f64)> = Vec::new();
    for c in &report.clusters {
        // real means real K; θ itself may have imaginary edges
        let pc = p_complex(tree, &c.point);
        let scale = 1.0 + pc.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if pc.iter().any(|z| z.im.abs() > opts.real_tol * scale) {
            continue;
        }
        real_points += 1;
        let p: Vec<f64> = pc.iter().map(|z| z.re).collect();
        let k = k_from_p_f64(&p, tree.n());
        if cholesky(&k, opts.pd_tol).is_none() {
            continue;
        }
        let Some(l) = loglik_at_k(&k, s) else {
            continue;
        };
        let dup = candidates.iter().any(|(_, q, _)| {
            let sc = 1.0 + q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            p.iter().zip(q).all(|(a, b)| (a - b).abs() <= 1e-6 * sc)
        });
        if !dup {
            candidates.push((c.point.clone(), p, l));
        }
    }
    let count = candidates.len();
    let best = candidates.into_iter().max_by(|a, b| a.2.total_cmp(&b.2));
    let Some((theta, p, loglik)) = best else {
        return Ok(MleOutcome::NotFound {
            critical_points: report.clusters.len(),
            real_points,
        });
    };
    let k = k_from_p_f64(&p, tree.n());
    let sigma = spd_inverse(&k, opts.pd_tol);
    let grad = loglik_gradient(tree, s, &theta);
    let score_residual = grad
        .iter()
        .zip(&theta)
        .map(|(g, t)| (g * t).norm())
        .fold(0.0, f64::max);
    Ok(MleOutcome::Found(MleResult {
        pd_certified: sigma.is_some(),
        sigma: sigma.unwrap_or_default(),
        theta,
        p,
        k,
        loglik,
        score_residual,
        real_pd_points: count,
    }))
}

/// MLEs of `(T, S)` and of the tree re-rooted at `r` with `S′`, and the
/// largest p-coordinate difference after undoing the label swap `0 ↔ r`.
#[derive(Debug, Clone, PartialEq)]
pub struct MleTransport {
    pub original: MleOutcome,
    pub rerooted: MleOutcome,
    pub max_p_difference: Option<f64>,
}

pub fn mle_transport(
    tree: &PhyloTree,
    s: &SampleCovariance,
    r: usize,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<MleTransport, PipelineError> {
    let n = tree.n();
    let original = mle(tree, s, seed, opts)?;
    let rr = tree.reroot(r)?;
    let s2 = crate::likelihood::reroot_covariance(s, r)?;
    let rerooted = mle(&rr.tree, &s2, seed, opts)?;
    let swap = |i: usize| {
        if i == 0 {
            r
        } else if i == r {
            0
        } else {
            i
        }
    };
    let max_p_difference = match (original.found(), rerooted.found()) {
        (Some(a), Some(b)) => Some(
            crate::toric::pairs(n)
                .into_iter()
                .map(|(i, j)| {
                    let (x, y) = (swap(i), swap(j));
                    let q = b.p[pair_index(x.min(y), x.max(y), n)];
                    (a.p[pair_index(i, j, n)] - q).abs()
                })
                .fold(0.0, f64::max),
        ),
        _ => None,
    };
    Ok(MleTransport {
        original,
        rerooted,
        max_p_difference,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToricDegreeReport {
    pub tree: String,
    pub seed: u64,
    pub fiber_size: u64,
    pub raw_count: u64,
    pub degree: u64,
    pub total_paths: u64,
    pub diverged: u64,
    pub failed: u64,
    /// Converged endpoints with some `θ_e = 0`.
    pub filtered: u64,
}

/// Random affine-linear forms in the `p_ij` with the path monomials
/// substituted, one per edge.
pub fn linear_section(tree: &PhyloTree, seed: u64) -> PolySystem {
    let arena = theta_arena(tree);
    let mono = path_monomials(tree, &arena);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coef = || {
        let v: i64 = rng.random_range(1..=30);
        integer(if rng.random_bool(0.5) { v } else { -v })
    };
    let eqs = (0..tree.num_edges())
        .map(|_| {
            let mut f = SparsePoly::constant(&arena, coef());
            for m in mono.values() {
                f = &f + &m.scale(&coef());
            }
            f
        })
        .collect();
    PolySystem::from_equations(&arena, eqs).unwrap()
}

/// Degree of the toric variety from one generic linear section.
pub fn toric_degree(
    tree: &PhyloTree,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<ToricDegreeReport, PipelineError> {
    let edges = tree.num_edges();
    if edges > opts.toric_max_edges {
        return Err(PipelineError::TooManyEdges {
            edges,
            limit: opts.toric_max_edges,
        });
    }
    let sys = linear_section(tree, seed);
    let sol = solve(&sys, &opts.solver_for(seed))?;
    let tol = opts.solver.tol_cluster;
    let mut raw = 0;
    let mut filtered = 0;
    for c in &sol.clusters {
        let scale = 1.0 + c.point.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if c.point.iter().any(|z| z.norm() < tol * scale) {
            filtered += c.multiplicity as u64;
        } else {
            raw += c.multiplicity as u64;
        }
    }
    let fiber = fiber_size(tree);
    let report = ToricDegreeReport {
        tree: tree.canonical().to_newick(),
        seed,
        fiber_size: fiber,
        raw_count: raw,
        degree: raw / fiber,
        total_paths: sol.total_paths,
        diverged: sol.diverged,
        failed: sol.failed,
        filtered,
    };
    if report.failed > 0 || !raw.is_multiple_of(fiber) {
        return Err(PipelineError::Invalid {
            reason: if report.failed > 0 {
                Invalidity::FailedPaths(report.failed)
            } else {
                Invalidity::NotDivisible { raw, fiber }
            },
            report: Box::new(MLDegreeReport {
                tree: report.tree,
                seed,
                mode: ScoreMode::Cleared,
                fiber_size: fiber,
                raw_count: raw,
                mld: raw / fiber,
                total_paths: report.total_paths,
                converged: sol.converged,
                diverged: report.diverged,
                failed: report.failed,
                reruns: sol.reruns,
                filtered_divisor: filtered,
                clusters: Vec::new(),
                max_residual: 0.0,
                multiple_clusters: 0,
                wall_time_s: None,
            }),
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RerootReport {
    pub tree: String,
    /// `(root leaf, report)` for the tree re-rooted at each leaf.
    pub per_root: Vec<(usize, MLDegreeReport)>,
    pub common: u64,
}

/// ML-degree of the tree re-rooted at every leaf; all must agree.
pub fn reroot_invariance_report(
    tree: &PhyloTree,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<RerootReport, PipelineError> {
    let mut per_root = Vec::new();
    for r in 0..=tree.n() {
        let t = if r == 0 {
            tree.clone()
        } else {
            tree.reroot(r)?.tree
        };
        per_root.push((r, ml_degree(&t, seed, opts)?));
    }
    let counts: Vec<(usize, u64)> = per_root.iter().map(|(r, rep)| (*r, rep.mld)).collect();
    if counts.iter().any(|&(_, m)| m != counts[0].1) {
        return Err(PipelineError::RerootMismatch(counts));
    }
    Ok(RerootReport {
        tree: tree.canonical().to_newick(),
        common: counts[0].1,
        per_root,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarRow {
    pub n: usize,
    pub computed: u64,
    pub expected: u64,
    pub converged: u64,
    pub expected_converged: u64,
    pub diverged: u64,
    pub expected_diverged: u64,
    pub total_paths: u64,
    pub bezout: u64,
}

impl StarRow {
    pub fn ok(&self) -> bool {
        self.computed == self.expected
            && self.converged == self.expected_converged
            && self.diverged == self.expected_diverged
            && self.total_paths == self.bezout
    }
}

/// One row of the star check: ML-degree and path accounting for the star
/// with `n + 1` leaves.
pub fn star_row(n: usize, seed: u64, opts: &PipelineOptions) -> Result<StarRow, PipelineError> {
    let rep = ml_degree(&PhyloTree::star(n)?, seed, opts)?;
    let bezout = 1u64 << (n + 2);
    let expected_diverged = 4 * (n as u64 + 1) + 2;
    Ok(StarRow {
        n,
        computed: rep.mld,
        expected: star_ml_degree(n),
        converged: rep.converged,
        expected_converged: bezout - expected_diverged,
        diverged: rep.diverged,
        expected_diverged,
        total_paths: rep.total_paths,
        bezout,
    })
}

/// Star rows for `n = 2..=n_max`; any mismatch is an error carrying the
/// whole table.
pub fn verify_star_formula(
    n_max: usize,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<Vec<StarRow>, PipelineError> {
    let rows = (2..=n_max)
        .map(|n| star_row(n, seed, opts))
        .collect::<Result<Vec<_>, _>>()?;
    if rows.iter().all(StarRow::ok) {
        Ok(rows)
    } else {
        Err(PipelineError::StarMismatch(rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_newick;

    #[test]
    fn small_stars() {
        let opts = PipelineOptions::default();
        let rows = verify_star_formula(4, 3, &opts).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.computed).collect::<Vec<_>>(),
            [1, 7, 21]
        );
        assert_eq!(rows[1].diverged, 18);
    }

    #[test]
    fn star_report_is_fiber_closed() {
        let t = PhyloTree::star(3).unwrap();
        let rep = ml_degree(&t, 5, &PipelineOptions::default()).unwrap();
        assert_eq!(rep.raw_count, 14);
        assert_eq!(rep.multiple_clusters, 0);
        assert!(fiber_closed(&t, &rep, 1e-6));
    }

    #[test]
    fn toric_degree_of_small_star_is_one() {
        let t = PhyloTree::star(2).unwrap();
        let rep = toric_degree(&t, 1, &PipelineOptions::default()).unwrap();
        assert_eq!(rep.raw_count, 2);
        assert_eq!(rep.degree, 1);
    }

    #[test]
    fn toric_guard() {
        let t = parse_newick("((1,2),(3,4),(5,6),0);").unwrap();
        assert!(matches!(
            toric_degree(&t, 1, &PipelineOptions::default()),
            Err(PipelineError::TooManyEdges {
                edges: 10,
                limit: 8
            })
        ));
    }

    fn sym2(a: i64, b: i64, c: i64) -> SampleCovariance {
        SampleCovariance::new(alloc::vec![
            alloc::vec![integer(a), integer(b)],
            alloc::vec![integer(b), integer(c)],
        ])
        .unwrap()
    }

    #[test]
    fn mle_identity_is_on_the_boundary() {
        // S = I forces p12 = 0, which no θ in the torus reaches
        let t = PhyloTree::star(2).unwrap();
        let out = mle(&t, &sym2(1, 0, 1), 1, &PipelineOptions::default()).unwrap();
        assert!(matches!(out, MleOutcome::NotFound { .. }), "{out:?}");
    }

    #[test]
    fn mle_small_star() {
        // K = S^{-1} = (1/3)[[2,-1],[-1,2]], so every p is 1/3 and θ = 1/√3
        let t = PhyloTree::star(2).unwrap();
        let out = mle(&t, &sym2(2, 1, 2), 1, &PipelineOptions::default()).unwrap();
        let r = out.found().expect("interior MLE");
        assert!(r.pd_certified);
        assert!(r.score_residual < 1e-8);
        assert_eq!(r.real_pd_points, 1);
        for v in &r.p {
            assert!((v - 1.0 / 3.0).abs() < 1e-10);
        }
        for t in &r.theta {
            assert!((t.norm() - 1.0 / libm::sqrt(3.0)).abs() < 1e-10);
        }
        assert!((r.sigma[0][1] - 1.0).abs() < 1e-9 && (r.sigma[0][0] - 2.0).abs() < 1e-9);
    }
}

//! Total-degree homotopy continuation in complex double precision.
//!
//! `H(x, t) = γ (1 − t) G(x) + t F(x)` with `G_i = x_i^{d_i} − c_i`. Paths
//! are tracked in projective coordinates `(x, z)` on an affine patch
//! `a·(x, z) = 1`, random at the start and then re-centred on the path, with an RK4 predictor and a Newton corrector under an
//! adaptive step. Paths heading to infinity stay bounded there and are told
//! apart by `‖x‖/|z|`. Endpoints are dehomogenized and refined by Newton's
//! method on `F`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{complex_min_pivot, complex_solve};
use crate::poly::{CompiledSystem, PolyError, PolySystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("system is not square: {equations} equations, {unknowns} unknowns")]
    NotSquare { equations: usize, unknowns: usize },
    #[error("equation {0} has degree zero")]
    ZeroDegree(usize),
    #[error("start system has {0} paths, above the limit {1}")]
    TooManyPaths(u128, u128),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub seed: u64,
    pub tol_track: f64,
    pub tol_refine: f64,
    pub tol_cluster: f64,
    pub infinity_threshold: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub initial_step: f64,
    pub max_steps: usize,
    /// Tracking stops at `t = 1 − end_gap`; the endpoint is then refined on
    /// the target system.
    pub end_gap: f64,
    /// Worker threads; `None` lets the pool decide. Ignored without the
    /// `parallel` feature.
    pub threads: Option<usize>,
    /// Re-run the whole system once with a fresh γ if any path failed.
    pub rerun_on_failure: bool,
    pub max_paths: u128,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            seed: 0,
            tol_track: 1e-8,
            tol_refine: 1e-10,
            tol_cluster: 1e-6,
            infinity_threshold: 1e8,
            min_step: 1e-14,
            max_step: 0.05,
            initial_step: 0.01,
            max_steps: 200_000,
            end_gap: 1e-11,
            threads: None,
            rerun_on_failure: true,
            max_paths: 1 << 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStatus {
    Converged,
    Diverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub start_index: u64,
    pub status: PathStatus,
    pub endpoint: Vec<Complex64>,
    /// Relative backward error of the refined endpoint.
    pub residual: f64,
    pub steps: usize,
    /// Final value of the path parameter reached.
    pub t: f64,
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub point: Vec<Complex64>,
    pub multiplicity: usize,
    pub max_residual: f64,
    /// Start indices of the incoming paths.
    pub paths: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSet {
    pub clusters: Vec<Cluster>,
    pub total_paths: u64,
    pub converged: u64,
    pub diverged: u64,
    pub failed: u64,
    /// Seed whose γ produced this set (differs from the requested seed
    /// after an automatic re-run).
    pub gamma_seed: u64,
    pub reruns: u32,
}

impl SolutionSet {
    pub fn num_solutions(&self) -> usize {
        self.clusters.iter().map(|c| c.multiplicity).sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.num_solutions() as u64 + self.diverged + self.failed == self.total_paths
    }
}

/// The homotopy between a target system and its total-degree start system.
#[derive(Debug, Clone)]
pub struct Homotopy {
    pub target: CompiledSystem,
    /// `F` homogenized with the extra coordinate `z` last.
    pub projective: CompiledSystem,
    pub patch: Vec<Complex64>,
    pub degrees: Vec<u32>,
    pub start_constants: Vec<Complex64>,
    pub gamma: Complex64,
}

fn unit_circle(rng: &mut ChaCha8Rng) -> Complex64 {
    let a: f64 = rng.random_range(0.0..2.0 * PI);
    Complex64::from_polar(1.0, a)
}

/// Homotopy from `x_i^{d_i} − c_i` with `c_i` and `γ` drawn on the unit circle.
pub fn total_degree_start(target: &PolySystem, seed: u64) -> Result<Homotopy, SolverError> {
    let n = target.arena().len();
    if target.len() != n {
        return Err(SolverError::NotSquare {
            equations: target.len(),
            unknowns: n,
        });
    }
    let degrees = target.degrees();
    if let Some(i) = degrees.iter().position(|&d| d == 0) {
        return Err(SolverError::ZeroDegree(i));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = unit_circle(&mut rng);
    let start_constants = (0..n).map(|_| unit_circle(&mut rng)).collect();
    let patch = (0..=n).map(|_| unit_circle(&mut rng)).collect();
    Ok(Homotopy {
        target: target.compile(),
        projective: homogenized(target)?,
        patch,
        degrees,
        start_constants,
        gamma,
    })
}

fn homogenized(target: &PolySystem) -> Result<CompiledSystem, SolverError> {
    let arena = target.arena();
    let mut name = String::from("z_h");
    while arena.index_of(&name).is_some() {
        name.push('_');
    }
    let ext = arena.extended([name.as_str()]).map_err(SolverError::Poly)?;
    let z = ext.len() - 1;
    let eqs = target
        .equations()
        .iter()
        .map(|e| e.embed(&ext)?.homogenize(z))
        .collect::<Result<Vec<_>, _>>()
        .map_err(SolverError::Poly)?;
    Ok(PolySystem::from_equations(&ext, eqs)
        .map_err(SolverError::Poly)?
        .compile())
}

impl Homotopy {
    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    /// Number of tracked coordinates, `dim() + 1`.
    fn size(&self) -> usize {
        self.degrees.len() + 1
    }

    /// Start root `k` lifted to the patch.
    fn start_projective(&self, k: u64) -> Vec<Complex64> {
        let mut y = self.start_point(k);
        y.push(Complex64::new(1.0, 0.0));
        let s: Complex64 = self.patch.iter().zip(&y).map(|(a, v)| a * v).sum();
        for v in y.iter_mut() {
            *v /= s;
        }
        y
    }

    pub fn num_paths(&self) -> u128 {
        self.degrees.iter().map(|&d| d as u128).product()
    }

    /// Start root with mixed-radix index `k` (first equation fastest).
    pub fn start_point(&self, mut k: u64) -> Vec<Complex64> {
        self.degrees
            .iter()
            .zip(&self.start_constants)
            .map(|(&d, &c)| {
                let j = k % d as u64;
                k /= d as u64;
                let r = c.powf(1.0 / d as f64);
                r * Complex64::from_polar(1.0, 2.0 * PI * j as f64 / d as f64)
            })
            .collect()
    }

    /// `H(y,t)`, `∂H/∂y` (row-major) and `∂H/∂t` at `y = (x, z)`; the
    /// last row is the patch.
    fn eval(&self, ws: &mut Workspace, y: &[Complex64], t: f64) {
        let n = self.dim();
        let m = n + 1;
        let z = y[n];
        self.projective.eval_with_jacobian(y, &mut ws.f, &mut ws.jf);
        let a = self.gamma * (1.0 - t);
        for i in 0..n {
            let d = self.degrees[i];
            let xd1 = y[i].powu(d - 1);
            let zd1 = z.powu(d - 1);
            let c = self.start_constants[i];
            let g = xd1 * y[i] - c * zd1 * z;
            ws.h[i] = a * g + ws.f[i] * t;
            ws.ht[i] = ws.f[i] - self.gamma * g;
            for j in 0..m {
                ws.hx[i * m + j] = ws.jf[i * m + j] * t;
            }
            ws.hx[i * m + i] += a * xd1 * (d as f64);
            ws.hx[i * m + n] -= a * c * zd1 * (d as f64);
        }
        let mut lin = Complex64::new(-1.0, 0.0);
        for j in 0..m {
            lin += ws.patch[j] * y[j];
            ws.hx[n * m + j] = ws.patch[j];
        }
        ws.h[n] = lin;
        ws.ht[n] = Complex64::zero();
    }

    /// `dx/dt = −H_x^{-1} H_t` into `out`.
    fn velocity(&self, ws: &mut Workspace, x: &[Complex64], t: f64, out: &mut [Complex64]) -> bool {
        self.eval(ws, x, t);
        for i in 0..self.size() {
            out[i] = -ws.ht[i];
        }
        complex_solve(&mut ws.hx, out, self.size()).is_some()
    }

    fn predict(
        &self,
        ws: &mut Workspace,
        x: &[Complex64],
        t: f64,
        h: f64,
        out: &mut [Complex64],
    ) -> bool {
        let n = self.size();
        let mut k1 = core::mem::take(&mut ws.k1);
        let mut k2 = core::mem::take(&mut ws.k2);
        let mut k3 = core::mem::take(&mut ws.k3);
        let mut k4 = core::mem::take(&mut ws.k4);
        let mut y = core::mem::take(&mut ws.y);
        let ok = (|| {
            if !self.velocity(ws, x, t, &mut k1) {
                return false;
            }
            for i in 0..n {
                y[i] = x[i] + k1[i] * (h / 2.0);
            }
            if !self.velocity(ws, &y, t + h / 2.0, &mut k2) {
                return false;
            }
            for i in 0..n {
                y[i] = x[i] + k2[i] * (h / 2.0);
            }
            if !self.velocity(ws, &y, t + h / 2.0, &mut k3) {
                return false;
            }
            for i in 0..n {
                y[i] = x[i] + k3[i] * h;
            }
            if !self.velocity(ws, &y, t + h, &mut k4) {
                return false;
            }
            for i in 0..n {
                out[i] = x[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
            true
        })();
        ws.k1 = k1;
        ws.k2 = k2;
        ws.k3 = k3;
        ws.k4 = k4;
        ws.y = y;
        ok
    }

    /// Up to three Newton steps on `H(·, t)`; succeeds when the update is
    /// below `tol` relative to the point and the iteration contracts.
    fn correct(&self, ws: &mut Workspace, x: &mut [Complex64], t: f64, tol: f64) -> bool {
        let n = self.size();
        let mut last = f64::INFINITY;
        for _ in 0..3 {
            self.eval(ws, x, t);
            let mut dx = core::mem::take(&mut ws.dx);
            for i in 0..n {
                dx[i] = -ws.h[i];
            }
            let solved = complex_solve(&mut ws.hx, &mut dx, n).is_some();
            let size = max_norm(&dx);
            if solved {
                for i in 0..n {
                    x[i] += dx[i];
                }
            }
            ws.dx = dx;
            if !solved || !size.is_finite() {
                return false;
            }
            if last.is_finite() {
                if size > 0.5 * last {
                    // stalled at the roundoff floor of an ill-conditioned
                    // point; good enough to keep following the path
                    return last <= STALL_BOUND * (1.0 + max_norm(x));
                }
            } else if size > FIRST_UPDATE_BOUND * (1.0 + max_norm(x)) {
                // the predictor landed too far from the path
                return false;
            }
            if size <= tol * (1.0 + max_norm(x)) {
                return true;
            }
            last = size;
        }
        false
    }
}

const FIRST_UPDATE_BOUND: f64 = 1e-3;
const STALL_BOUND: f64 = 1e-6;

struct Workspace {
    f: Vec<Complex64>,
    jf: Vec<Complex64>,
    h: Vec<Complex64>,
    ht: Vec<Complex64>,
    hx: Vec<Complex64>,
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    y: Vec<Complex64>,
    dx: Vec<Complex64>,
    patch: Vec<Complex64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = || vec![Complex64::zero(); n];
        Workspace {
            f: vec![Complex64::zero(); n - 1],
            jf: vec![Complex64::zero(); (n - 1) * n],
            h: z(),
            ht: z(),
            hx: vec![Complex64::zero(); n * n],
            k1: z(),
            k2: z(),
            k3: z(),
            k4: z(),
            y: z(),
            dx: z(),
            patch: z(),
        }
    }
}

fn max_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).sqrt()
}

/// Tracks the path from start root `index` from `t = 0` to `t = 1` and
/// classifies its endpoint.
pub fn track_path(h: &Homotopy, index: u64, opts: &SolverOptions) -> PathResult {
    let start = h.start_projective(index);
    track_from(h, index, start, opts)
}

/// `‖x‖ / |z|` beyond `threshold`.
fn at_infinity(y: &[Complex64], threshold: f64) -> bool {
    let (x, z) = y.split_at(y.len() - 1);
    max_norm(x) > threshold * z[0].norm()
}

/// Rescales `y` to unit length and moves the patch to `conj(y)`, so the
/// patch never becomes tangent to the path.
fn recenter(y: &mut [Complex64], patch: &mut [Complex64]) {
    let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for (v, a) in y.iter_mut().zip(patch.iter_mut()) {
        *v /= norm;
        *a = v.conj();
    }
}

fn dehomogenize(y: &[Complex64]) -> Vec<Complex64> {
    let (x, z) = y.split_at(y.len() - 1);
    x.iter().map(|v| v / z[0]).collect()
}

fn track_from(h: &Homotopy, index: u64, start: Vec<Complex64>, opts: &SolverOptions) -> PathResult {
    let n = h.size();
    let mut ws = Workspace::new(n);
    ws.patch.copy_from_slice(&h.patch);
    let mut x = start;
    let mut trial = vec![Complex64::zero(); n];
    let mut t = 0.0f64;
    let mut step = opts.initial_step.min(opts.max_step);
    let mut streak = 0;
    let mut steps = 0;
    let result = |status, endpoint: Vec<Complex64>, residual, steps, t| PathResult {
        start_index: index,
        status,
        endpoint,
        residual,
        steps,
        t,
        cluster: None,
    };
    let t_stop = 1.0 - opts.end_gap;
    while t < t_stop {
        if steps >= opts.max_steps {
            if t > 0.99 {
                return finish(h, index, x, steps, t, opts);
            }
            return result(
                PathStatus::Failed,
                dehomogenize(&x),
                f64::INFINITY,
                steps,
                t,
            );
        }
        steps += 1;
        // never more than half the remaining distance, so t = 1 is only
        // approached geometrically and the target is not solved prematurely
        let hstep = step.min(0.5 * (1.0 - t));
        let t_next = (t + hstep).min(t_stop);
        let ok = h.predict(&mut ws, &x, t, t_next - t, &mut trial)
            && h.correct(&mut ws, &mut trial, t_next, opts.tol_track);
        if ok {
            core::mem::swap(&mut x, &mut trial);
            t = t_next;
            recenter(&mut x, &mut ws.patch);
            if at_infinity(&x, opts.infinity_threshold) {
                return result(
                    PathStatus::Diverged,
                    dehomogenize(&x),
                    f64::INFINITY,
                    steps,
                    t,
                );
            }
            streak += 1;
            if streak >= 3 {
                step = (2.0 * step).min(opts.max_step);
                streak = 0;
            }
        } else {
            streak = 0;
            step = hstep / 2.0;
            if step < opts.min_step {
                if t > 0.99 {
                    // stalled near t = 1: either a solution at infinity or
                    // an ill-conditioned finite one
                    return finish(h, index, x, steps, t, opts);
                }
                return result(
                    PathStatus::Failed,
                    dehomogenize(&x),
                    f64::INFINITY,
                    steps,
                    t,
                );
            }
        }
    }
    finish(h, index, x, steps, t, opts)
}

/// Refines a tracked endpoint on the target; the path converged iff the
/// refined point is a regular solution next to where tracking stopped.
fn finish(
    h: &Homotopy,
    index: u64,
    y: Vec<Complex64>,
    steps: usize,
    t: f64,
    opts: &SolverOptions,
) -> PathResult {
    let x = dehomogenize(&y);
    if at_infinity(&y, opts.infinity_threshold) {
        return PathResult {
            start_index: index,
            status: PathStatus::Diverged,
            endpoint: x,
            residual: f64::INFINITY,
            steps,
            t,
            cluster: None,
        };
    }
    let r = newton_refine(&h.target, &x, opts.tol_refine);
    let (status, endpoint, residual) = if r.converged && close(&r.point, &x, 1e-4) {
        (PathStatus::Converged, r.point, r.residual)
    } else {
        (PathStatus::Diverged, x, r.residual)
    };
    PathResult {
        start_index: index,
        status,
        endpoint,
        residual,
        steps,
        t,
        cluster: None,
    }
}

fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    let scale = 1.0 + max_norm(b);
    a.iter().zip(b).all(|(u, v)| (u - v).norm() <= tol * scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineResult {
    pub point: Vec<Complex64>,
    pub residual: f64,
    pub converged: bool,
    pub singular: bool,
    pub iterations: usize,
}

const SINGULAR_PIVOT: f64 = 1e-11;
const MAX_REFINE_ITERATIONS: usize = 30;

/// Smallest full-pivoting LU pivot of the Jacobian with row `i` divided by
/// `1 + Σ|c||x|^m` of equation `i` and column `j` multiplied by `1 + |x_j|`.
pub fn scaled_min_pivot(system: &CompiledSystem, x: &[Complex64]) -> f64 {
    let n = system.nvars();
    let mut f = vec![Complex64::zero(); system.len()];
    let mut jac = vec![Complex64::zero(); system.len() * n];
    system.eval_with_jacobian(x, &mut f, &mut jac);
    for (i, p) in system.polys().iter().enumerate() {
        let r = 1.0 / (1.0 + p.magnitude(x));
        for j in 0..n {
            jac[i * n + j] *= r * (1.0 + x[j].norm());
        }
    }
    complex_min_pivot(&jac, n)
}

/// Newton's method on `F`; converged when the relative backward error is at
/// most `tol` and the Jacobian at the point is numerically nonsingular.
pub fn newton_refine(system: &CompiledSystem, point: &[Complex64], tol: f64) -> RefineResult {
    let n = system.nvars();
    let mut x = point.to_vec();
    let mut f = vec![Complex64::zero(); system.len()];
    let mut jac = vec![Complex64::zero(); system.len() * n];
    let mut dx = vec![Complex64::zero(); n];
    let mut sizes: Vec<f64> = Vec::new();
    let mut singular = false;
    // quadratic convergence shows as a collapsing update; singular roots
    // only halve it
    let contracting = |s: &[f64], x: &[Complex64]| match s {
        [.., prev, last] => *last <= 0.1 * prev || *last <= 1e-13 * (1.0 + max_norm(x)),
        [last] => *last <= 1e-13 * (1.0 + max_norm(x)),
        [] => false,
    };
    for _ in 0..MAX_REFINE_ITERATIONS {
        system.eval_with_jacobian(&x, &mut f, &mut jac);
        for i in 0..n {
            dx[i] = -f[i];
        }
        if complex_solve(&mut jac, &mut dx, n).is_none() {
            singular = true;
            break;
        }
        let size = max_norm(&dx);
        if !size.is_finite() {
            break;
        }
        for i in 0..n {
            x[i] += dx[i];
        }
        sizes.push(size);
        if size <= 1e-15 * (1.0 + max_norm(&x)) {
            break;
        }
        if contracting(&sizes, &x) && system.relative_residual(&x) <= tol {
            break;
        }
    }
    let residual = system.relative_residual(&x);
    if !singular {
        singular = !contracting(&sizes, &x) || scaled_min_pivot(system, &x) < SINGULAR_PIVOT;
    }
    let finite = x.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    RefineResult {
        converged: finite && !singular && residual <= tol,
        point: x,
        residual,
        singular,
        iterations: sizes.len(),
    }
}

/// Groups converged endpoints whose coordinates agree to `tol` relative to
/// the cluster representative. Results must be ordered by start index.
pub fn cluster_endpoints(results: &mut [PathResult], tol: f64) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    for r in results.iter_mut() {
        if r.status != PathStatus::Converged {
            continue;
        }
        let found = clusters
            .iter()
            .position(|c| close(&r.endpoint, &c.point, tol));
        match found {
            Some(k) => {
                let c = &mut clusters[k];
                c.multiplicity += 1;
                c.max_residual = c.max_residual.max(r.residual);
                c.paths.push(r.start_index);
                r.cluster = Some(k);
            }
            None => {
                r.cluster = Some(clusters.len());
                clusters.push(Cluster {
                    point: r.endpoint.clone(),
                    multiplicity: 1,
                    max_residual: r.residual,
                    paths: vec![r.start_index],
                });
            }
        }
    }
    clusters
}

#[cfg(feature = "parallel")]
fn track_all(h: &Homotopy, opts: &SolverOptions) -> Vec<PathResult> {
    use rayon::prelude::*;
    let total = h.num_paths() as u64;
    let run = || {
        (0..total)
            .into_par_iter()
            .map(|k| track_path(h, k, opts))
            .collect::<Vec<_>>()
    };
    match opts.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn track_all(h: &Homotopy, opts: &SolverOptions) -> Vec<PathResult> {
    (0..h.num_paths() as u64)
        .map(|k| track_path(h, k, opts))
        .collect()
}

/// Tracks every start root and clusters the converged endpoints; also
/// returns the per-path results in start-index order.
pub fn solve_with_paths(
    target: &PolySystem,
    opts: &SolverOptions,
) -> Result<(SolutionSet, Vec<PathResult>), SolverError> {
    let mut seed = opts.seed;
    let mut reruns = 0;
    loop {
        let h = total_degree_start(target, seed)?;
        if h.num_paths() > opts.max_paths {
            return Err(SolverError::TooManyPaths(h.num_paths(), opts.max_paths));
        }
        let mut results = track_all(&h, opts);
        let failed = results
            .iter()
            .filter(|r| r.status == PathStatus::Failed)
            .count() as u64;
        if failed > 0 && opts.rerun_on_failure && reruns == 0 {
            reruns += 1;
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            continue;
        }
        let clusters = cluster_endpoints(&mut results, opts.tol_cluster);
        let count = |s| results.iter().filter(|r| r.status == s).count() as u64;
        let set = SolutionSet {
            clusters,
            total_paths: results.len() as u64,
            converged: count(PathStatus::Converged),
            diverged: count(PathStatus::Diverged),
            failed: count(PathStatus::Failed),
            gamma_seed: seed,
            reruns,
        };
        return Ok((set, results));
    }
}

pub fn solve(target: &PolySystem, opts: &SolverOptions) -> Result<SolutionSet, SolverError> {
    solve_with_paths(target, opts).map(|(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{integer, SparsePoly, VarArena};

    #[test]
    fn square_roots_of_one() {
        let a = VarArena::new(["x"]).unwrap();
        let f = &a.var(0).pow(2) - &SparsePoly::one(&a);
        let sys = PolySystem::from_equations(&a, vec![f]).unwrap();
        let h = total_degree_start(&sys, 1).unwrap();
        assert_eq!(h.num_paths(), 2);
        let opts = SolverOptions::default();
        let mut ends: Vec<f64> = (0..2)
            .map(|k| {
                let r = track_path(&h, k, &opts);
                assert_eq!(r.status, PathStatus::Converged);
                assert!(r.residual < 1e-12);
                r.endpoint[0].re
            })
            .collect();
        ends.sort_by(f64::total_cmp);
        assert!((ends[0] + 1.0).abs() < 1e-12 && (ends[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn newton_sqrt2() {
        let a = VarArena::new(["x"]).unwrap();
        let f = &a.var(0).pow(2) - &SparsePoly::constant(&a, integer(2));
        let c = PolySystem::from_equations(&a, vec![f]).unwrap().compile();
        let r = newton_refine(&c, &[Complex64::new(1.4, 0.0)], 1e-12);
        assert!(r.converged);
        assert!((r.point[0].re - core::f64::consts::SQRT_2).abs() < 1e-14);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn singular_root_is_reported() {
        let a = VarArena::new(["x"]).unwrap();
        let f = a.var(0).pow(2);
        let c = PolySystem::from_equations(&a, vec![f]).unwrap().compile();
        let r = newton_refine(&c, &[Complex64::new(0.1, 0.0)], 1e-10);
        assert!(!r.converged);
    }

    #[test]
    fn deficient_system_diverges() {
        // Bézout number 2, one finite solution (2, 1/2)
        let a = VarArena::new(["x", "y"]).unwrap();
        let f = &(&a.var(0) * &a.var(1)) - &SparsePoly::one(&a);
        let g = &a.var(0) - &SparsePoly::constant(&a, integer(2));
        let sys = PolySystem::from_equations(&a, vec![f, g]).unwrap();
        let s = solve(&sys, &SolverOptions::default()).unwrap();
        assert_eq!(s.total_paths, 2);
        assert_eq!(s.converged, 1);
        assert_eq!(s.diverged, 1);
        assert!(s.is_balanced());
        assert!((s.clusters[0].point[1].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn determinism_same_seed() {
        let a = VarArena::new(["x", "y"]).unwrap();
        let f = &(&a.var(0).pow(2) + &a.var(1).pow(2)) - &SparsePoly::constant(&a, integer(5));
        let g = &(&a.var(0) * &a.var(1)) - &SparsePoly::constant(&a, integer(2));
        let sys = PolySystem::from_equations(&a, vec![f, g]).unwrap();
        let o = SolverOptions {
            seed: 9,
            ..Default::default()
        };
        let s1 = solve(&sys, &o).unwrap();
        let s2 = solve(&sys, &o).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.clusters.len(), 4);
        let s3 = solve(&sys, &SolverOptions { seed: 10, ..o }).unwrap();
        assert_eq!(s3.clusters.len(), 4);
    }

    #[test]
    fn rejects_non_square() {
        let a = VarArena::new(["x", "y"]).unwrap();
        let sys = PolySystem::from_equations(&a, vec![a.var(0)]).unwrap();
        assert!(matches!(
            total_degree_start(&sys, 0),
            Err(SolverError::NotSquare { .. })
        ));
        let z = PolySystem::from_equations(&a, vec![a.var(0), SparsePoly::one(&a)]).unwrap();
        assert_eq!(
            total_degree_start(&z, 0).unwrap_err(),
            SolverError::ZeroDegree(1)
        );
    }
}

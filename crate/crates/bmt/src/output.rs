//! JSON shapes and plain-text rendering. Field order in each struct is the
//! key order of the JSON output.

use std::fmt::Write;

use bmt_core::pipeline::{MLDegreeReport, MleOutcome, StarRow, ToricDegreeReport};
use bmt_core::Complex64;
use serde::Serialize;

#[derive(Serialize)]
pub struct ClusterJson {
    /// `[re, im]` per θ coordinate.
    pub point: Vec<[f64; 2]>,
    pub multiplicity: u64,
    pub residual: f64,
}

#[derive(Serialize)]
pub struct MldJson {
    pub tree: String,
    pub seed: u64,
    pub fiber_size: u64,
    pub raw_count: u64,
    pub mld: u64,
    pub diverged: u64,
    pub filtered_divisor: u64,
    pub clusters: Vec<ClusterJson>,
}

fn pair(z: &Complex64) -> [f64; 2] {
    [z.re, z.im]
}

impl From<&MLDegreeReport> for MldJson {
    fn from(r: &MLDegreeReport) -> Self {
        MldJson {
            tree: r.tree.clone(),
            seed: r.seed,
            fiber_size: r.fiber_size,
            raw_count: r.raw_count,
            mld: r.mld,
            diverged: r.diverged,
            filtered_divisor: r.filtered_divisor,
            clusters: r
                .clusters
                .iter()
                .map(|c| ClusterJson {
                    point: c.point.iter().map(pair).collect(),
                    multiplicity: c.multiplicity,
                    residual: c.residual,
                })
                .collect(),
        }
    }
}

pub fn mld_text(r: &MLDegreeReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tree           {}", r.tree);
    let _ = writeln!(s, "seed           {}", r.seed);
    let _ = writeln!(s, "system         {:?}", r.mode);
    let _ = writeln!(s, "fiber size     {}", r.fiber_size);
    let _ = writeln!(s, "raw count      {}", r.raw_count);
    let _ = writeln!(s, "ML-degree      {}", r.mld);
    let _ = writeln!(
        s,
        "paths          {} ({} converged, {} diverged, {} failed, {} re-runs)",
        r.total_paths, r.converged, r.diverged, r.failed, r.reruns
    );
    let _ = writeln!(s, "filtered       {}", r.filtered_divisor);
    let _ = writeln!(s, "max residual   {:.2e}", r.max_residual);
    if r.multiple_clusters > 0 {
        let _ = writeln!(
            s,
            "warning        {} clusters reached by several paths",
            r.multiple_clusters
        );
    }
    if let Some(t) = r.wall_time_s {
        let _ = writeln!(s, "wall time      {t:.2} s");
    }
    s
}

#[derive(Serialize)]
pub struct MleJson {
    pub tree: String,
    pub seed: u64,
    pub status: &'static str,
    pub loglik: Option<f64>,
    pub p: Option<Vec<f64>>,
    pub sigma: Option<Vec<Vec<f64>>>,
    pub k: Option<Vec<Vec<f64>>>,
    pub score_residual: Option<f64>,
    pub pd_certified: bool,
    pub real_pd_points: usize,
    pub real_points: Option<usize>,
    pub critical_points: Option<usize>,
}

impl MleJson {
    pub fn new(tree: String, seed: u64, out: &MleOutcome) -> Self {
        match out {
            MleOutcome::Found(m) => MleJson {
                tree,
                seed,
                status: "found",
                loglik: Some(m.loglik),
                p: Some(m.p.clone()),
                sigma: Some(m.sigma.clone()),
                k: Some(m.k.clone()),
                score_residual: Some(m.score_residual),
                pd_certified: m.pd_certified,
                real_pd_points: m.real_pd_points,
                real_points: None,
                critical_points: None,
            },
            MleOutcome::NotFound {
                critical_points,
                real_points,
            } => MleJson {
                tree,
                seed,
                status: "not_found",
                loglik: None,
                p: None,
                sigma: None,
                k: None,
                score_residual: None,
                pd_certified: false,
                real_pd_points: 0,
                real_points: Some(*real_points),
                critical_points: Some(*critical_points),
            },
        }
    }
}

fn matrix_text(m: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for row in m {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>14.8}")).collect();
        let _ = writeln!(s, "  {}", cells.join(" "));
    }
    s
}

pub fn mle_text(tree: &str, out: &MleOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tree           {tree}");
    match out {
        MleOutcome::Found(m) => {
            let _ = writeln!(s, "log-likelihood {:.10}", m.loglik);
            let _ = writeln!(s, "score residual {:.2e}", m.score_residual);
            let _ = writeln!(s, "real PD points {}", m.real_pd_points);
            let _ = writeln!(s, "PD certified   {}", m.pd_certified);
            let _ = writeln!(s, "p              {:?}", m.p);
            let _ = write!(s, "Sigma\n{}", matrix_text(&m.sigma));
            let _ = write!(s, "K\n{}", matrix_text(&m.k));
        }
        MleOutcome::NotFound {
            critical_points,
            real_points,
        } => {
            let _ = writeln!(
                s,
                "MLE not found among critical points ({critical_points} critical, {real_points} real, none positive definite)"
            );
        }
    }
    s
}

#[derive(Serialize)]
pub struct DegreeJson {
    pub tree: String,
    pub seed: u64,
    pub fiber_size: u64,
    pub raw_count: u64,
    pub degree: u64,
    pub diverged: u64,
    pub filtered: u64,
}

impl From<&ToricDegreeReport> for DegreeJson {
    fn from(r: &ToricDegreeReport) -> Self {
        DegreeJson {
            tree: r.tree.clone(),
            seed: r.seed,
            fiber_size: r.fiber_size,
            raw_count: r.raw_count,
            degree: r.degree,
            diverged: r.diverged,
            filtered: r.filtered,
        }
    }
}

#[derive(Serialize)]
pub struct StarRowJson {
    pub n: usize,
    pub computed: u64,
    pub expected: u64,
    pub converged: u64,
    pub expected_converged: u64,
    pub diverged: u64,
    pub expected_diverged: u64,
    pub total_paths: u64,
    pub ok: bool,
}

impl From<&StarRow> for StarRowJson {
    fn from(r: &StarRow) -> Self {
        StarRowJson {
            n: r.n,
            computed: r.computed,
            expected: r.expected,
            converged: r.converged,
            expected_converged: r.expected_converged,
            diverged: r.diverged,
            expected_diverged: r.expected_diverged,
            total_paths: r.total_paths,
            ok: r.ok(),
        }
    }
}

pub fn star_text(rows: &[StarRow]) -> String {
    let mut s = String::from(" n  mld  expected  converged  diverged  paths  ok\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:>2} {:>4} {:>9} {:>10} {:>9} {:>6}  {}",
            r.n,
            r.computed,
            r.expected,
            r.converged,
            r.diverged,
            r.total_paths,
            if r.ok() { "yes" } else { "NO" }
        );
    }
    s
}

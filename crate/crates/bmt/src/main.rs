//! `bmt`: ML-degrees, MLEs and toric degrees of Brownian motion tree models.

mod input;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bmt_core::determinant::{det_k_formula, det_symbolic_k};
use bmt_core::likelihood::{reroot_covariance, SampleCovariance, ScoreMode};
use bmt_core::pipeline::{self, MLDegreeReport, PipelineError, PipelineOptions};
use bmt_core::toric::{
    fiber_size, p_name, pairs, path_monomials, symbolic_k, theta_arena, toric_generators,
};
use bmt_core::{PhyloTree, SolverOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use output::{DegreeJson, MldJson, MleJson, StarRowJson};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("validity check failed: {0}")]
    Invalid(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Likelihood(#[from] bmt_core::likelihood::LikelihoodError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Pipeline(
                PipelineError::Invalid { .. }
                | PipelineError::RerootMismatch(_)
                | PipelineError::StarMismatch(_),
            ) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "bmt",
    version,
    about = "Brownian motion tree models: ML-degrees, MLEs and toric degrees"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Print a machine-readable JSON report.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for the generic covariance and the homotopy.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_track: f64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_refine: f64,
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol_cluster: f64,
    #[arg(long, global = true, default_value_t = 1e8)]
    infinity_threshold: f64,
    /// Worker threads for path tracking (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Covariance matrix as CSV, one row per line.
    #[arg(long, global = true, conflicts_with = "samples")]
    cov: Option<PathBuf>,
    /// Samples as CSV, one observation per line.
    #[arg(long, global = true)]
    samples: Option<PathBuf>,
    /// Lift the size guards for long-running computations.
    #[arg(long, global = true)]
    long: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemKind {
    Star,
    Aux,
    Cleared,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a tree and print its structure.
    Parse { tree: String },
    /// Print the concentration matrix in the edge parameters.
    Matrix { tree: String },
    /// Print the quartet binomials generating the toric ideal.
    Ideal { tree: String },
    /// Print the factored determinant of the concentration matrix.
    Det {
        tree: String,
        /// Compare with the expanded symbolic determinant.
        #[arg(long)]
        check: bool,
    },
    /// ML-degree at a generic covariance.
    Mld {
        tree: String,
        /// Polynomial form of the score equations.
        #[arg(long, value_enum)]
        system: Option<SystemKind>,
    },
    /// Maximum likelihood estimate for the data given by --cov or --samples.
    Mle { tree: String },
    /// Re-root at a leaf, or check the ML-degree at every rooting.
    Reroot {
        tree: String,
        #[arg(long, required_unless_present = "mld")]
        leaf: Option<usize>,
        /// Compute the ML-degree for every rooting and compare.
        #[arg(long)]
        mld: bool,
    },
    /// Degree of the toric variety via a generic linear section.
    Degree { tree: String },
    /// Check the star ML-degree formula and path accounting.
    VerifyStar {
        #[arg(long, default_value_t = 6)]
        n_max: usize,
    },
}

impl Global {
    fn options(&self) -> PipelineOptions {
        let mut o = PipelineOptions {
            solver: SolverOptions {
                seed: self.seed,
                tol_track: self.tol_track,
                tol_refine: self.tol_refine,
                tol_cluster: self.tol_cluster,
                infinity_threshold: self.infinity_threshold,
                threads: self.threads,
                ..SolverOptions::default()
            },
            ..PipelineOptions::default()
        };
        if self.long {
            o.toric_max_edges = usize::MAX;
            o.solver.max_paths = u128::MAX;
        }
        o
    }

    fn data(&self) -> Result<Option<SampleCovariance>, CliError> {
        match (&self.cov, &self.samples) {
            (Some(p), _) => input::read_covariance(p).map(Some),
            (None, Some(p)) => input::read_samples(p).map(Some),
            (None, None) => Ok(None),
        }
    }

    fn emit<T: Serialize>(&self, json: &T, text: impl FnOnce() -> String) -> Result<(), CliError> {
        let out = if self.json {
            serde_json::to_string_pretty(json)? + "\n"
        } else {
            text()
        };
        // a closed pipe (`bmt ... | head`) is not an error
        match std::io::stdout().lock().write_all(out.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Parse { tree } => cmd_parse(g, &input::resolve_tree(tree)?),
        Command::Matrix { tree } => cmd_matrix(g, &input::resolve_tree(tree)?),
        Command::Ideal { tree } => cmd_ideal(g, &input::resolve_tree(tree)?),
        Command::Det { tree, check } => cmd_det(g, &input::resolve_tree(tree)?, *check),
        Command::Mld { tree, system } => cmd_mld(g, &input::resolve_tree(tree)?, *system),
        Command::Mle { tree } => cmd_mle(g, &input::resolve_tree(tree)?),
        Command::Reroot { tree, leaf, mld } => {
            cmd_reroot(g, &input::resolve_tree(tree)?, *leaf, *mld)
        }
        Command::Degree { tree } => cmd_degree(g, &input::resolve_tree(tree)?),
        Command::VerifyStar { n_max } => cmd_verify_star(g, *n_max),
    }
}

#[derive(Serialize)]
struct ParseJson {
    tree: String,
    leaves: usize,
    internal_nodes: Vec<[usize; 2]>,
    edges: Vec<[usize; 2]>,
    fiber_size: u64,
}

fn cmd_parse(g: &Global, t: &PhyloTree) -> Result<(), CliError> {
    let json = ParseJson {
        tree: t.canonical().to_newick(),
        leaves: t.num_leaves(),
        internal_nodes: t.internal_nodes().map(|v| [v, t.degree(v)]).collect(),
        edges: t.edges().iter().map(|&(a, b)| [a, b]).collect(),
        fiber_size: fiber_size(t),
    };
    g.emit(&json, || {
        let mut s = format!(
            "tree        {}\nleaves      {}\nfiber size  {}\n",
            json.tree, json.leaves, json.fiber_size
        );
        for [v, d] in &json.internal_nodes {
            s += &format!("node {v:<4}   degree {d}\n");
        }
        for (e, [a, b]) in json.edges.iter().enumerate() {
            s += &format!("edge t{e:<4}  {a} - {b}\n");
        }
        s
    })
}

#[derive(Serialize)]
struct MatrixJson {
    tree: String,
    p: Vec<(String, String)>,
    k: Vec<Vec<String>>,
}

fn cmd_matrix(g: &Global, t: &PhyloTree) -> Result<(), CliError> {
    let n = t.n();
    let arena = theta_arena(t);
    let mono = path_monomials(t, &arena);
    let (_, k) = symbolic_k(t);
    let json = MatrixJson {
        tree: t.to_newick(),
        p: pairs(n)
            .into_iter()
            .map(|(i, j)| (p_name(i, j, n), mono.get(i, j).to_string()))
            .collect(),
        k: k.iter()
            .map(|row| row.iter().map(|e| e.to_string()).collect())
            .collect(),
    };
    g.emit(&json, || {
        let mut s = String::new();
        for (name, m) in &json.p {
            s += &format!("{name} = {m}\n");
        }
        for (i, row) in json.k.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                s += &format!("K[{},{}] = {e}\n", i + 1, j + 1);
            }
        }
        s
    })
}

#[derive(Serialize)]
struct IdealJson {
    tree: String,
    generators: Vec<String>,
}

fn cmd_ideal(g: &Global, t: &PhyloTree) -> Result<(), CliError> {
    let (_, gens) = toric_generators(t);
    let json = IdealJson {
        tree: t.to_newick(),
        generators: gens.iter().map(|p| p.to_string()).collect(),
    };
    g.emit(&json, || {
        let mut s = format!("{} generators\n", json.generators.len());
        for p in &json.generators {
            s += &format!("{p}\n");
        }
        s
    })
}

#[derive(Serialize)]
struct DetJson {
    tree: String,
    factored: String,
    degree: usize,
    expanded_terms: usize,
    matches_symbolic: Option<bool>,
}

fn cmd_det(g: &Global, t: &PhyloTree, check: bool) -> Result<(), CliError> {
    let arena = theta_arena(t);
    let f = det_k_formula(t);
    let expanded = f.expand(&arena);
    let matches = check.then(|| det_symbolic_k(t) == expanded);
    let json = DetJson {
        tree: t.to_newick(),
        factored: f.render(&arena),
        degree: f.degree(),
        expanded_terms: expanded.terms().count(),
        matches_symbolic: matches,
    };
    g.emit(&json, || {
        let mut s = format!(
            "det K = {}\ndegree {}, {} terms expanded\n",
            json.factored, json.degree, json.expanded_terms
        );
        if let Some(m) = matches {
            s += &format!("symbolic determinant agrees: {m}\n");
        }
        s
    })?;
    if matches == Some(false) {
        return Err(CliError::Invalid(
            "factored determinant differs from the symbolic one".into(),
        ));
    }
    Ok(())
}

/// Prints the report an invalid run carried before failing with code 2.
fn report_or_invalid(
    g: &Global,
    res: Result<MLDegreeReport, PipelineError>,
    start: Instant,
) -> Result<(), CliError> {
    let (mut report, failure) = match res {
        Ok(r) => (r, None),
        Err(PipelineError::Invalid { reason, report }) => (*report, Some(reason)),
        Err(e) => return Err(e.into()),
    };
    report.wall_time_s = Some(start.elapsed().as_secs_f64());
    g.emit(&MldJson::from(&report), || output::mld_text(&report))?;
    match failure {
        Some(reason) => Err(CliError::Invalid(reason.to_string())),
        None => Ok(()),
    }
}

fn cmd_mld(g: &Global, t: &PhyloTree, system: Option<SystemKind>) -> Result<(), CliError> {
    let mut opts = g.options();
    opts.mode = system.map(|s| match s {
        SystemKind::Star => ScoreMode::Star,
        SystemKind::Aux => ScoreMode::Aux,
        SystemKind::Cleared => ScoreMode::Cleared,
    });
    let start = Instant::now();
    let res = match g.data()? {
        Some(s) => pipeline::ml_degree_with(t, &s, g.seed, &opts),
        None => pipeline::ml_degree(t, g.seed, &opts),
    };
    report_or_invalid(g, res, start)
}

fn cmd_mle(g: &Global, t: &PhyloTree) -> Result<(), CliError> {
    let s = g
        .data()?
        .ok_or_else(|| CliError::Usage("mle needs --cov or --samples".into()))?;
    let out = pipeline::mle(t, &s, g.seed, &g.options())?;
    let name = t.to_newick();
    g.emit(&MleJson::new(name.clone(), g.seed, &out), || {
        output::mle_text(&name, &out)
    })
}

#[derive(Serialize)]
struct RerootJson {
    tree: String,
    leaf: usize,
    rerooted: String,
    leaf_permutation: Vec<usize>,
    edge_permutation: Vec<usize>,
    s_prime: Option<Vec<Vec<String>>>,
}

#[derive(Serialize)]
struct RootMld {
    root: usize,
    mld: u64,
    raw_count: u64,
}

#[derive(Serialize)]
struct RerootMldJson {
    tree: String,
    seed: u64,
    common: Option<u64>,
    rootings: Vec<RootMld>,
}

fn cmd_reroot(g: &Global, t: &PhyloTree, leaf: Option<usize>, mld: bool) -> Result<(), CliError> {
    if mld {
        let res = pipeline::reroot_invariance_report(t, g.seed, &g.options());
        let (rootings, common, failure) = match res {
            Ok(r) => (
                r.per_root
                    .iter()
                    .map(|(root, rep)| RootMld {
                        root: *root,
                        mld: rep.mld,
                        raw_count: rep.raw_count,
                    })
                    .collect(),
                Some(r.common),
                None,
            ),
            Err(PipelineError::RerootMismatch(counts)) => (
                counts
                    .iter()
                    .map(|&(root, mld)| RootMld {
                        root,
                        mld,
                        raw_count: 0,
                    })
                    .collect::<Vec<_>>(),
                None,
                Some(format!("ML-degrees differ across rootings: {counts:?}")),
            ),
            Err(e) => return Err(e.into()),
        };
        let json = RerootMldJson {
            tree: t.canonical().to_newick(),
            seed: g.seed,
            common,
            rootings,
        };
        g.emit(&json, || {
            let mut s = String::from("root  mld\n");
            for r in &json.rootings {
                s += &format!("{:>4} {:>4}\n", r.root, r.mld);
            }
            if let Some(c) = json.common {
                s += &format!("all rootings agree: {c}\n");
            }
            s
        })?;
        return match failure {
            Some(f) => Err(CliError::Invalid(f)),
            None => Ok(()),
        };
    }
    let r = leaf.ok_or_else(|| CliError::Usage("--leaf is required".into()))?;
    if r > t.n() {
        return Err(CliError::Usage(format!(
            "leaf {r} out of range 0..={}",
            t.n()
        )));
    }
    let rr = t.reroot(r).map_err(|e| CliError::Usage(e.to_string()))?;
    let s_prime = match g.data()? {
        Some(s) if r > 0 => {
            let sp = reroot_covariance(&s, r)?;
            Some(
                sp.entries()
                    .iter()
                    .map(|row| row.iter().map(|v| v.to_string()).collect())
                    .collect(),
            )
        }
        _ => None,
    };
    let json = RerootJson {
        tree: t.to_newick(),
        leaf: r,
        rerooted: rr.tree.to_newick(),
        leaf_permutation: rr.leaf_permutation.clone(),
        edge_permutation: rr.edge_permutation.clone(),
        s_prime,
    };
    g.emit(&json, || {
        let mut s = format!(
            "rerooted    {}\nleaves      {:?}\nedges       {:?}\n",
            json.rerooted, json.leaf_permutation, json.edge_permutation
        );
        if let Some(sp) = &json.s_prime {
            s += "S'\n";
            for row in sp {
                s += &format!("  {}\n", row.join(", "));
            }
        }
        s
    })
}

fn cmd_degree(g: &Global, t: &PhyloTree) -> Result<(), CliError> {
    let rep = pipeline::toric_degree(t, g.seed, &g.options())?;
    g.emit(&DegreeJson::from(&rep), || {
        format!(
            "tree           {}\nfiber size     {}\nraw count      {}\ntoric degree   {}\npaths          {} ({} diverged)\n",
            rep.tree, rep.fiber_size, rep.raw_count, rep.degree, rep.total_paths, rep.diverged
        )
    })
}

#[derive(Serialize)]
struct StarJson {
    seed: u64,
    rows: Vec<StarRowJson>,
}

fn cmd_verify_star(g: &Global, n_max: usize) -> Result<(), CliError> {
    if n_max < 2 || (n_max > 6 && !g.long) {
        return Err(CliError::Usage(
            "--n-max must be in 2..=6 (larger needs --long)".into(),
        ));
    }
    let (rows, failure) = match pipeline::verify_star_formula(n_max, g.seed, &g.options()) {
        Ok(rows) => (rows, false),
        Err(PipelineError::StarMismatch(rows)) => (rows, true),
        Err(e) => return Err(e.into()),
    };
    let json = StarJson {
        seed: g.seed,
        rows: rows.iter().map(StarRowJson::from).collect(),
    };
    g.emit(&json, || output::star_text(&rows))?;
    if failure {
        return Err(CliError::Invalid("star formula mismatch".into()));
    }
    Ok(())
}

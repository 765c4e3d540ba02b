//! Command-line front end. Exit codes: 0 success, 1 input error, 2 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{four_moons, noisy_knn, sample_constraints, DEFAULT_MOON_NOISE};
use crate::io;
use crate::merge::{Constraint, ConstraintSet};
use crate::metrics::rand_index;
use crate::pipeline::{run_pipeline, PipelineConfig, RunReport};

#[derive(Debug, Parser)]
#[command(name = "fastge", version, about = "Constrained spectral clustering")]
struct Cli {
    /// Worker threads for block operations and k-means restarts.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic data with ground truth and constraints.
    #[command(subcommand)]
    Generate(Generate),
    /// Cluster an edge-list graph under must-link/cannot-link constraints.
    Cluster(ClusterArgs),
    /// Segment a PGM image from scribbled pixel labels.
    Segment(SegmentArgs),
    /// Rand index of a labeling against ground truth.
    Evaluate(EvaluateArgs),
    /// Time the pipeline on synthetic image grids of increasing size.
    Bench(BenchArgs),
}

#[derive(Debug, Subcommand)]
enum Generate {
    /// Four-Moons cloud with a NoisyKnn graph.
    FourMoons(MoonsArgs),
    /// NoisyKnn graph over a point-cloud file (`x y label` per line).
    NoisyKnn(KnnArgs),
}

#[derive(Debug, Args)]
struct MoonsArgs {
    #[arg(long, default_value_t = 1500)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_MOON_NOISE)]
    noise: f64,
    /// Nearest neighbors per point.
    #[arg(long, default_value_t = 30)]
    kg: usize,
    /// Expected random edges per vertex.
    #[arg(long, default_value_t = 15.0)]
    lg: f64,
    /// Number of labeled vertices; their pairs become constraints.
    #[arg(long, default_value_t = 75)]
    constraints: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for graph.txt, labels.txt, constraints.txt and points.txt.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct KnnArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long, default_value_t = 30)]
    kg: usize,
    #[arg(long, default_value_t = 15.0)]
    lg: f64,
    #[arg(long, default_value_t = 0)]
    constraints: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Number of clusters.
    #[arg(long)]
    k: Option<usize>,
    /// Eigensolver residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// k-means restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Per-cluster sweep refinement.
    #[arg(long)]
    refine: bool,
    /// Seed for the eigensolver and k-means.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON pipeline configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the run report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    constraints: Option<PathBuf>,
    /// Ground-truth labels; adds the Rand index to the report.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output labels, one per clustered vertex.
    #[arg(long, default_value = "labels.txt")]
    out: PathBuf,
    /// Where to write clustered vertex ids when only the largest component is used.
    #[arg(long)]
    id_map: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[arg(long)]
    image: PathBuf,
    /// Scribble file, `row col label` per line.
    #[arg(long)]
    scribbles: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 4)]
    connectivity: u8,
    /// Output label image (PGM).
    #[arg(long, default_value = "segments.pgm")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Image side lengths; each run clusters a side × side grid.
    #[arg(long, value_delimiter = ',', default_values_t = vec![64, 128, 256])]
    sides: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    constraints: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Runs the command line `argv` (including the program name) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            exit_code(&e)
        }
    }
}

/// Exit code for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Error message including the chain of causes.
fn render(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        source = s.source();
    }
    msg
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads == 0 {
        return Err(Error::InvalidArgument("--threads must be at least 1".into()));
    }
    match cli.command {
        Command::Generate(Generate::FourMoons(a)) => {
            let cloud = four_moons(a.n, a.noise, a.seed)?;
            write_generated(&cloud, a.kg, a.lg, a.constraints, a.seed, &a.out_dir)
        }
        Command::Generate(Generate::NoisyKnn(a)) => {
            let cloud = io::load_point_cloud(&a.points)?;
            write_generated(&cloud, a.kg, a.lg, a.constraints, a.seed, &a.out_dir)
        }
        Command::Cluster(a) => cluster(a, cli.threads),
        Command::Segment(a) => segment(a, cli.threads),
        Command::Evaluate(a) => {
            let labels = io::load_labels(&a.labels)?;
            let truth = io::load_labels(&a.truth)?;
            println!("{}", rand_index(&labels, &truth)?);
            Ok(())
        }
        Command::Bench(a) => bench(a, cli.threads),
    }
}

fn write_generated(
    cloud: &crate::generators::LabeledPointCloud,
    kg: usize,
    lg: f64,
    labeled: usize,
    seed: u64,
    dir: &Path,
) -> Result<()> {
    let g = noisy_knn(cloud, kg, lg, seed)?;
    let c = sample_constraints(&cloud.labels, labeled, seed)?;
    fs::create_dir_all(dir)?;
    io::save_edge_list(&g, &dir.join("graph.txt"))?;
    io::save_labels(&cloud.labels, &dir.join("labels.txt"))?;
    io::save_constraints(&c, &dir.join("constraints.txt"))?;
    io::save_point_cloud(cloud, &dir.join("points.txt"))?;
    println!(
        "{} vertices, {} edges, {} constraints written to {}",
        g.n(),
        g.num_edges(),
        c.len(),
        dir.display()
    );
    Ok(())
}

fn pipeline_config(s: &SolverArgs, threads: usize, default_k: Option<usize>) -> Result<PipelineConfig> {
    let mut cfg = match &s.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))?,
        None => PipelineConfig::default(),
    };
    if let Some(k) = s.k.or(if s.config.is_none() { default_k } else { None }) {
        cfg.k = k;
    }
    if let Some(tol) = s.tol {
        cfg.eig_tol = tol;
    }
    if let Some(r) = s.restarts {
        cfg.restarts = r;
    }
    if let Some(seed) = s.seed {
        cfg.eig_seed = seed;
        cfg.kmeans_seed = seed;
    }
    cfg.refine |= s.refine;
    cfg.threads = threads;
    cfg.validate()?;
    Ok(cfg)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("report serialization: {e}")))?;
    Ok(fs::write(path, text + "\n")?)
}

fn print_summary(report: &RunReport) {
    let q = &report.quality;
    println!(
        "{} vertices in {} clusters, max badness {}, eigenvalues {:?}",
        report.labels.len(),
        q.per_cluster_badness.len(),
        q.max_badness,
        report.eigenvalues
    );
    if let Some(c) = q.sweep_certificate {
        println!("sweep certificate {c}");
    }
    if let Some(r) = q.rand_index {
        println!("rand index {r}");
    }
}

fn cluster(a: ClusterArgs, threads: usize) -> Result<()> {
    let cfg = pipeline_config(&a.solver, threads, None)?;
    let g = io::load_edge_list(&a.graph)?;
    let c = match &a.constraints {
        Some(p) => io::load_constraints(p)?,
        None => ConstraintSet::new(),
    };
    let mut report = run_pipeline(&g, &c, &cfg)?;
    if let Some(t) = &a.truth {
        report.score_against(&io::load_labels(t)?)?;
    }
    io::save_labels(&report.labels, &a.out)?;
    if report.vertex_ids.len() != report.n_input {
        let path = a.id_map.clone().unwrap_or_else(|| a.out.with_extension("ids"));
        io::save_labels(&report.vertex_ids, &path)?;
        warn!("labels cover the largest component only; vertex ids in {}", path.display());
    }
    if let Some(p) = &a.solver.report {
        write_json(&report, p)?;
    }
    print_summary(&report);
    Ok(())
}

fn segment(a: SegmentArgs, threads: usize) -> Result<()> {
    let img = io::load_pgm(&a.image)?;
    let scribbles = io::load_scribbles(&a.scribbles)?;
    let mut distinct: Vec<usize> = scribbles.iter().map(|s| s.label).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let cfg = pipeline_config(&a.solver, threads, Some(distinct.len().max(2)))?;
    let g = io::image_to_graph(&img, a.sigma, io::Connectivity::try_from(a.connectivity)?)?;
    let c = io::scribble_constraints(&img, &scribbles)?;
    let report = run_pipeline(&g, &c, &cfg)?;
    let labels = report.full_labels().into_iter().map(|l| l.unwrap_or(0)).collect::<Vec<_>>();
    io::save_pgm(&io::labels_to_image(&labels, img.width, img.height)?, &a.out)?;
    if let Some(p) = &a.solver.report {
        write_json(&report, p)?;
    }
    print_summary(&report);
    Ok(())
}

/// Disk-on-background image of the given side with seeded noise, and its mask.
pub fn synthetic_disk(side: usize, seed: u64) -> (io::GrayImage, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = side as f64 / 2.0;
    let radius = side as f64 / 3.0;
    let mut pixels = Vec::with_capacity(side * side);
    let mut truth = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            let inside = (row as f64 - c).hypot(col as f64 - c) < radius;
            let base = if inside { 0.3 } else { 0.7 };
            let v: f64 = base + rng.random_range(-0.08..0.08);
            pixels.push((v.clamp(0.0, 1.0) * 255.0).round() as u16);
            truth.push(inside as usize);
        }
    }
    let img = io::GrayImage::new(side, side, 255, pixels).expect("valid synthetic image");
    (img, truth)
}

/// `count` random vertex pairs labeled from `truth`.
pub fn random_pair_constraints(truth: &[usize], count: usize, seed: u64) -> ConstraintSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = truth.len();
    let mut c = ConstraintSet::new();
    while c.len() < count && n > 1 {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u == v {
            continue;
        }
        let e = Constraint::new(u.min(v), u.max(v));
        if truth[u] == truth[v] {
            c.must_link.push(e);
        } else {
            c.cannot_link.push(e);
        }
    }
    c
}

#[derive(Debug, Serialize)]
struct BenchRow {
    n: usize,
    edges: usize,
    iterations: usize,
    converged: bool,
    rand_index: f64,
    timings: crate::pipeline::StageTimings,
}

fn bench(a: BenchArgs, threads: usize) -> Result<()> {
    let cfg = PipelineConfig {
        threads,
        eig_seed: a.seed,
        kmeans_seed: a.seed,
        ..Default::default()
    };
    let mut rows = Vec::new();
    println!("{:>9} {:>9} {:>6} {:>10} {:>10} {:>7}", "n", "edges", "iters", "eigs_ms", "total_ms", "rand");
    for &side in &a.sides {
        let (img, truth) = synthetic_disk(side, a.seed);
        let g = io::image_to_graph(&img, 0.1, io::Connectivity::Four)?;
        let c = random_pair_constraints(&truth, a.constraints, a.seed);
        let mut report = run_pipeline(&g, &c, &cfg)?;
        let ri = report.score_against(&truth)?;
        println!(
            "{:>9} {:>9} {:>6} {:>10.1} {:>10.1} {:>7.4}",
            g.n(),
            g.num_edges(),
            report.eigen_iterations,
            report.timings.eigs_ms,
            report.timings.total_ms,
            ri
        );
        rows.push(BenchRow {
            n: g.n(),
            edges: g.num_edges(),
            iterations: report.eigen_iterations,
            converged: report.eigen_converged,
            rand_index: ri,
            timings: report.timings,
        });
    }
    if let Some(p) = &a.report {
        write_json(&rows, p)?;
    }
    Ok(())
}

//! End-to-end constrained clustering: merge, eigensolve, embed, partition.

use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, dense_generalized_eigs, generalized_eigs, EigenOptions, EigenSolution};
use crate::embedding::{compute_embedding, EmbeddingDegrees};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::merge::{merge_with, Constraint, ConstraintSet, MergeOptions};
use crate::metrics::{badness, rand_index, QualityReport};
use crate::operators::{build_preconditioner, PreconditionerKind};
use crate::partition::{cheeger_sweep, kmeans_masked, refine_per_component_sweep, KMeansOptions};

pub const DEFAULT_DENSE_THRESHOLD: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub k: usize,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    pub eig_seed: u64,
    pub restarts: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_seed: u64,
    pub merge: MergeOptions,
    /// Per-cluster sweep refinement after partitioning.
    pub refine: bool,
    /// Graphs with at most this many vertices use the dense eigensolver.
    pub dense_threshold: usize,
    pub threads: usize,
    pub embedding_degrees: EmbeddingDegrees,
    pub preconditioner: PreconditionerKind,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: 2,
            eig_tol: eigen::DEFAULT_TOL,
            eig_max_iter: eigen::DEFAULT_MAX_ITER,
            eig_seed: 0,
            restarts: crate::partition::DEFAULT_RESTARTS,
            kmeans_max_iter: crate::partition::DEFAULT_KMEANS_ITER,
            kmeans_seed: 0,
            merge: MergeOptions::default(),
            refine: false,
            dense_threshold: DEFAULT_DENSE_THRESHOLD,
            threads: 1,
            embedding_degrees: EmbeddingDegrees::default(),
            preconditioner: PreconditionerKind::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if !(self.eig_tol > 0.0) {
            return bad("eigensolver tolerance must be positive");
        }
        if self.eig_max_iter == 0 || self.kmeans_max_iter == 0 {
            return bad("iteration limits must be positive");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        Ok(())
    }
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub merge_ms: f64,
    pub eigs_ms: f64,
    pub embed_ms: f64,
    pub partition_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Cluster per clustered vertex; parallel to `vertex_ids`.
    pub labels: Vec<usize>,
    /// Original ids of the clustered vertices. Differs from `0..n` only when
    /// the input was disconnected and its largest component was used.
    pub vertex_ids: Vec<usize>,
    pub n_input: usize,
    pub quality: QualityReport,
    pub eigenvalues: Vec<f64>,
    pub eigen_residuals: Vec<f64>,
    pub eigen_iterations: usize,
    pub eigen_converged: bool,
    pub warnings: Vec<String>,
    pub timings: StageTimings,
    pub config: PipelineConfig,
}

impl RunReport {
    /// Labels indexed by original vertex id; vertices outside the clustered
    /// component get `None`.
    pub fn full_labels(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n_input];
        for (&v, &l) in self.vertex_ids.iter().zip(&self.labels) {
            out[v] = Some(l);
        }
        out
    }

    /// Records the Rand index against ground truth given for every input vertex.
    pub fn score_against(&mut self, truth: &[usize]) -> Result<f64> {
        crate::graph::check_len(self.n_input, truth.len())?;
        let truth: Vec<usize> = self.vertex_ids.iter().map(|&v| truth[v]).collect();
        let r = rand_index(&self.labels, &truth)?;
        self.quality.rand_index = Some(r);
        Ok(r)
    }

    /// The report with timings zeroed, for reproducibility comparisons.
    pub fn without_timings(&self) -> RunReport {
        RunReport {
            timings: StageTimings::default(),
            ..self.clone()
        }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs the full pipeline inside a thread pool of `cfg.threads` workers.
pub fn run_pipeline(g_d: &WeightedGraph, constraints: &ConstraintSet, cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(g_d, constraints, cfg))
}

/// Restricts the problem to the largest component when `g_d` is disconnected.
fn restrict_to_giant(
    g_d: &WeightedGraph,
    constraints: &ConstraintSet,
    warnings: &mut Vec<String>,
) -> Result<(Option<WeightedGraph>, ConstraintSet, Vec<usize>)> {
    constraints.validate(g_d.n())?;
    let (_, count) = g_d.components();
    if count <= 1 {
        return Ok((None, constraints.clone(), (0..g_d.n()).collect()));
    }
    let (giant, ids) = g_d.largest_component()?;
    let mut new_id = vec![usize::MAX; g_d.n()];
    for (i, &v) in ids.iter().enumerate() {
        new_id[v] = i;
    }
    let mut dropped = 0;
    let mut remap = |list: &[Constraint]| -> Vec<Constraint> {
        list.iter()
            .filter_map(|c| {
                let (u, v) = (new_id[c.u], new_id[c.v]);
                if u == usize::MAX || v == usize::MAX {
                    dropped += 1;
                    None
                } else {
                    Some(Constraint { u, v, weight: c.weight })
                }
            })
            .collect()
    };
    let kept = ConstraintSet {
        must_link: remap(&constraints.must_link),
        cannot_link: remap(&constraints.cannot_link),
    };
    let msg = format!(
        "input graph has {count} components; clustering the largest ({} of {} vertices), {dropped} constraints dropped",
        giant.n(),
        g_d.n()
    );
    warn!("{msg}");
    warnings.push(msg);
    Ok((Some(giant), kept, ids))
}

fn run_in_pool(g_d: &WeightedGraph, constraints: &ConstraintSet, cfg: &PipelineConfig) -> Result<RunReport> {
    let start = Instant::now();
    let mut warnings = Vec::new();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let n_input = g_d.n();
    let (giant, constraints, vertex_ids) =
        restrict_to_giant(g_d, constraints, &mut warnings).map_err(|e| e.in_stage("merge"))?;
    let g_d = giant.as_ref().unwrap_or(g_d);
    let n = g_d.n();
    if cfg.k > n {
        return Err(Error::InvalidArgument(format!("k = {} exceeds n = {n}", cfg.k)));
    }
    let problem = merge_with(g_d, &constraints, cfg.merge).map_err(|e| e.in_stage("merge"))?;
    timings.merge_ms = ms(t);

    let t = Instant::now();
    let (lg, lh) = (problem.lg(), problem.lh());
    let want = cfg.k.min(n - 1);
    let solution = if n <= cfg.dense_threshold {
        dense_generalized_eigs(&lg, &lh, want)
    } else {
        let pre = build_preconditioner(&problem.g, cfg.preconditioner).map_err(|e| e.in_stage("eigs"))?;
        let options = EigenOptions {
            tol: cfg.eig_tol,
            max_iter: cfg.eig_max_iter,
            seed: cfg.eig_seed,
        };
        generalized_eigs(&lg, &lh, want, pre.as_ref(), options)
    };
    let solution: EigenSolution = match solution {
        Ok(s) => s,
        Err(Error::EigenNotConverged(s)) => {
            let msg = format!(
                "eigensolver stopped after {} iterations with residual {:.3e}; using best iterate",
                s.iterations,
                s.max_residual()
            );
            warn!("{msg}");
            warnings.push(msg);
            *s
        }
        Err(e) => return Err(e.in_stage("eigs")),
    };
    timings.eigs_ms = ms(t);

    let t = Instant::now();
    let degrees = match cfg.embedding_degrees {
        EmbeddingDegrees::Merged => problem.merged_degrees(),
        EmbeddingDegrees::Data => problem.data_degrees.clone(),
    };
    // The constant vector counts as one of the k directions; it is deflated
    // and would embed to zero, so only k - 1 nontrivial vectors are used.
    let dim = (cfg.k - 1).min(solution.vectors.ncols());
    let x = solution.vectors.columns(0, dim).into_owned();
    let embedding = compute_embedding(&x, &lh, &degrees).map_err(|e| e.in_stage("embed"))?;
    timings.embed_ms = ms(t);

    let t = Instant::now();
    let (mut partition, certificate) = if cfg.k == 2 {
        let sweep = cheeger_sweep(&problem.g, &lh, solution.column(0)).map_err(|e| e.in_stage("partition"))?;
        (sweep.partition(), Some(sweep.certificate))
    } else {
        let active: Vec<bool> = (0..n).map(|j| !embedding.is_zero_row(j)).collect();
        let options = KMeansOptions {
            restarts: cfg.restarts,
            max_iter: cfg.kmeans_max_iter,
            seed: cfg.kmeans_seed,
        };
        let result = kmeans_masked(&embedding.u, Some(&active), cfg.k, options)
            .map_err(|e| e.in_stage("partition"))?;
        (result.partition, None)
    };
    if cfg.refine {
        partition = refine_per_component_sweep(&partition, &embedding.l, &problem.g, &lh)
            .map_err(|e| e.in_stage("partition"))?;
    }
    let mut quality = badness(&problem.g, &lh, &partition).map_err(|e| e.in_stage("partition"))?;
    quality.sweep_certificate = certificate;
    timings.partition_ms = ms(t);
    timings.total_ms = ms(start);

    Ok(RunReport {
        labels: partition.labels().to_vec(),
        vertex_ids,
        n_input,
        quality,
        eigenvalues: solution.values.clone(),
        eigen_residuals: solution.residual_norms.clone(),
        eigen_iterations: solution.iterations,
        eigen_converged: solution.converged,
        warnings,
        timings,
        config: cfg.clone(),
    })
}

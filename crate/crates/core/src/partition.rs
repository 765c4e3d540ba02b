//! From embeddings to clusters.
//!
//! Two-way problems use a Cheeger sweep over the sorted eigenvector; the
//! best prefix comes with a certificate from the generalized Cheeger
//! inequality. General `k` uses k-means on the embedding rows.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_len, DegreeVector, VertexSet, WeightedGraph};
use crate::operators::LaplacianOperator;

pub const DEFAULT_RESTARTS: usize = 20;
pub const DEFAULT_KMEANS_ITER: usize = 300;

/// Cluster label per vertex; labels are `0..k`, numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Relabels `labels` to `0..k` in order of first appearance.
    pub fn new(labels: &[usize]) -> Partition {
        let mut map = std::collections::HashMap::new();
        let labels: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition { k: map.len(), labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn cluster(&self, c: usize) -> VertexSet {
        VertexSet::from_mask(self.labels.iter().map(|&l| l == c).collect())
    }

    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == c).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// The best prefix of the sorted order.
    pub cut_set: VertexSet,
    /// `cut_G / cut_H` of `cut_set`, the minimum over all prefixes.
    pub ratio_gh: f64,
    /// Minimum over all prefixes of `cut_G / cut_K`, with `K` the demand graph of `G`.
    pub ratio_gk: f64,
    /// `ratio_gh · ratio_gk / 4`, a lower bound on the Rayleigh quotient of the swept vector.
    pub certificate: f64,
}

impl SweepResult {
    /// Two-way partition with `cut_set` on one side.
    pub fn partition(&self) -> Partition {
        let labels: Vec<usize> = self.cut_set.as_mask().iter().map(|&b| b as usize).collect();
        Partition::new(&labels)
    }
}

/// Ratio with an explicit infinity when the denominator vanishes.
pub(crate) fn ratio(num: f64, den: f64, zero_tol: f64) -> f64 {
    if den > zero_tol {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Scale below which an incrementally computed `H` cut is treated as zero.
pub(crate) fn h_zero_tol(h: &LaplacianOperator) -> f64 {
    let sparse: f64 = h.sparse_part().map_or(0.0, |g| g.edges().map(|e| e.2).sum());
    let dense = h.rank_one_part().map_or(0.0, |(c, d)| c * d.vol());
    1e-12 * (sparse + dense)
}

/// Incrementally maintained cut of a growing or shrinking vertex set in a
/// graph that may carry a scaled demand-graph term.
struct CutTracker<'a> {
    sparse: Option<&'a WeightedGraph>,
    rank_one: Option<(f64, &'a DegreeVector)>,
    edge_cut: f64,
    volume: f64,
}

impl<'a> CutTracker<'a> {
    fn new(op: &LaplacianOperator<'a>) -> Self {
        CutTracker {
            sparse: op.sparse_part(),
            rank_one: op.rank_one_part(),
            edge_cut: 0.0,
            volume: 0.0,
        }
    }

    /// Moves `v` into the set; `inside` must still report `v` as outside.
    fn insert(&mut self, v: usize, inside: impl Fn(usize) -> bool) {
        if let Some(g) = self.sparse {
            let mut deg = 0.0;
            let mut to_set = 0.0;
            for (u, w) in g.neighbors(v) {
                deg += w;
                if inside(u) {
                    to_set += w;
                }
            }
            self.edge_cut += deg - 2.0 * to_set;
        }
        if let Some((_, d)) = self.rank_one {
            self.volume += d.as_slice()[v];
        }
    }

    /// Removes `v` from the set; `inside` must still report `v` as inside.
    fn remove(&mut self, v: usize, inside: impl Fn(usize) -> bool) {
        if let Some(g) = self.sparse {
            let mut deg = 0.0;
            let mut to_rest = 0.0;
            for (u, w) in g.neighbors(v) {
                deg += w;
                if u != v && inside(u) {
                    to_rest += w;
                }
            }
            self.edge_cut += 2.0 * to_rest - deg;
        }
        if let Some((_, d)) = self.rank_one {
            self.volume -= d.as_slice()[v];
        }
    }

    fn cut(&self) -> f64 {
        let demand = match self.rank_one {
            Some((c, d)) => c * self.volume * (d.vol() - self.volume) / d.vol(),
            None => 0.0,
        };
        self.edge_cut.max(0.0) + demand.max(0.0)
    }
}

/// Sweeps the `n − 1` prefixes of the vertices sorted by `x` and returns the
/// one minimizing `cut_G / cut_H`.
///
/// Ties prefer the smaller `cut_G`, then the shorter prefix. Prefixes with
/// zero `cut_H` are skipped. Runs in `O(m + n log n)`.
pub fn cheeger_sweep(g: &WeightedGraph, h: &LaplacianOperator, x: &[f64]) -> Result<SweepResult> {
    let n = g.n();
    check_len(n, x.len())?;
    check_len(n, h.dim())?;
    let d = g.degrees();
    if d.vol() <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let x = crate::embedding::d_orthogonal_representative(x, &d)?;
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Err(Error::InvalidArgument(
            "cannot sweep a constant vector".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));

    let g_op = LaplacianOperator::from_graph(g);
    let mut g_cut = CutTracker::new(&g_op);
    let mut h_cut = CutTracker::new(h);
    let zero_tol = h_zero_tol(h);
    let mut in_set = vec![false; n];
    let mut volume = 0.0;

    let mut best: Option<(f64, f64, usize)> = None;
    let mut min_gk = f64::INFINITY;
    for (i, &v) in order[..n - 1].iter().enumerate() {
        g_cut.insert(v, |u| in_set[u]);
        h_cut.insert(v, |u| in_set[u]);
        in_set[v] = true;
        volume += d.as_slice()[v];

        let cut_g = g_cut.cut();
        let cut_k = volume * (d.vol() - volume) / d.vol();
        if cut_k > 0.0 {
            min_gk = min_gk.min(cut_g / cut_k);
        }
        let r = ratio(cut_g, h_cut.cut(), zero_tol);
        if !r.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some((br, bc, _)) => r < br || (r == br && cut_g < bc),
        };
        if better {
            best = Some((r, cut_g, i + 1));
        }
    }

    let (ratio_gh, _, len) = best.ok_or_else(|| {
        Error::IllPosed("every sweep prefix has zero cut in H".into())
    })?;
    let cut_set = VertexSet::from_indices(n, order[..len].iter().copied())?;
    Ok(SweepResult {
        cut_set,
        ratio_gh,
        ratio_gk: min_gk,
        certificate: ratio_gh * min_gk / 4.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            restarts: DEFAULT_RESTARTS,
            max_iter: DEFAULT_KMEANS_ITER,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub partition: Partition,
    /// Within-cluster sum of squares of the active rows.
    pub objective: f64,
    /// Index of the restart that produced the result.
    pub restart: usize,
}

/// Best-of-restarts k-means on the rows of `points`.
pub fn kmeans(
    points: &DMatrix<f64>,
    k: usize,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<Partition> {
    let options = KMeansOptions {
        restarts,
        max_iter,
        seed,
    };
    Ok(kmeans_masked(points, None, k, options)?.partition)
}

/// k-means where only rows with `active[i]` take part in the centroid
/// updates; inactive rows are attached to their nearest final centroid.
pub fn kmeans_masked(
    points: &DMatrix<f64>,
    active: Option<&[bool]>,
    k: usize,
    options: KMeansOptions,
) -> Result<KMeansResult> {
    let n = points.nrows();
    if let Some(mask) = active {
        check_len(n, mask.len())?;
    }
    if options.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| points.row(i).iter().copied().collect())
        .collect();
    let active_ids: Vec<usize> = (0..n)
        .filter(|&i| active.map_or(true, |m| m[i]))
        .collect();
    let distinct: HashSet<Vec<u64>> = active_ids
        .iter()
        .map(|&i| rows[i].iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    if k > distinct.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the number of distinct points ({})",
            distinct.len()
        )));
    }

    let runs: Vec<(f64, Vec<Vec<f64>>)> = (0..options.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(r as u64);
            let run = lloyd(&rows, &active_ids, k, options.max_iter, &mut rng);
            (run.objective, run.centers)
        })
        .collect();
    let (restart, (objective, centers)) = runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .expect("at least one restart");

    let labels: Vec<usize> = rows.iter().map(|p| nearest(p, &centers).0).collect();
    Ok(KMeansResult {
        partition: Partition::new(&labels),
        objective,
        restart,
    })
}

pub(crate) struct LloydRun {
    pub centers: Vec<Vec<f64>>,
    pub objective: f64,
    /// Objective after each assignment step.
    #[cfg_attr(not(test), allow(dead_code))]
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of and squared distance to the nearest center; ties go to the lower index.
fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let dist = sq_dist(p, center);
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}

/// Distance-weighted seeding: each new center is drawn with probability
/// proportional to the squared distance to the nearest chosen center.
fn seed_centers(rows: &[Vec<f64>], ids: &[usize], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![rows[ids[rng.random_range(0..ids.len())]].clone()];
    let mut dist: Vec<f64> = ids.iter().map(|&i| sq_dist(&rows[i], &centers[0])).collect();
    while centers.len() < k {
        let pick = match WeightedIndex::new(&dist) {
            Ok(w) => w.sample(rng),
            // all remaining mass is zero: take the first point not yet a center
            Err(_) => dist.iter().position(|&d| d > 0.0).unwrap_or(0),
        };
        let center = rows[ids[pick]].clone();
        for (slot, &i) in dist.iter_mut().zip(ids) {
            *slot = slot.min(sq_dist(&rows[i], &center));
        }
        centers.push(center);
    }
    centers
}

pub(crate) fn lloyd(
    rows: &[Vec<f64>],
    ids: &[usize],
    k: usize,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> LloydRun {
    let dim = rows.first().map_or(0, |r| r.len());
    let mut centers = seed_centers(rows, ids, k, rng);
    let mut assign = vec![usize::MAX; ids.len()];
    let mut history = Vec::new();
    let mut objective = f64::INFINITY;
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut dists = vec![0.0; ids.len()];
        for (a, &i) in ids.iter().enumerate() {
            let (c, dist) = nearest(&rows[i], &centers);
            if assign[a] != c {
                assign[a] = c;
                changed = true;
            }
            dists[a] = dist;
        }
        // Refill empty clusters with the points farthest from their centers.
        let mut counts = vec![0usize; k];
        for &c in &assign {
            counts[c] += 1;
        }
        let empties: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
        for empty in empties {
            let far = (0..ids.len())
                .filter(|&a| counts[assign[a]] > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            if let Some(a) = far {
                counts[assign[a]] -= 1;
                assign[a] = empty;
                counts[empty] = 1;
                dists[a] = 0.0;
                centers[empty] = rows[ids[a]].clone();
                changed = true;
            }
        }
        objective = dists.iter().sum();
        history.push(objective);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        for (a, &i) in ids.iter().enumerate() {
            for (s, v) in sums[assign[a]].iter_mut().zip(&rows[i]) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    LloydRun {
        centers,
        objective,
        history,
    }
}

/// Optionally splits each cluster by a sweep over its vertices sorted by `l`.
///
/// A cluster is split only when the larger badness of the two pieces is
/// below the badness of the cluster itself. Singletons are left alone.
pub fn refine_per_component_sweep(
    p: &Partition,
    l: &[f64],
    g: &WeightedGraph,
    h: &LaplacianOperator,
) -> Result<Partition> {
    let n = p.n();
    check_len(n, l.len())?;
    check_len(n, g.n())?;
    check_len(n, h.dim())?;
    let g_op = LaplacianOperator::from_graph(g);
    let zero_tol = h_zero_tol(h);
    let mut labels = p.labels().to_vec();
    let mut next_label = p.k();

    for c in 0..p.k() {
        let mut members = p.members(c);
        if members.len() < 2 {
            continue;
        }
        let cluster = p.cluster(c);
        let current = ratio(g.cut(&cluster)?, h.cut(&cluster)?, zero_tol);
        members.sort_by(|&a, &b| l[a].total_cmp(&l[b]).then(a.cmp(&b)));

        // S grows from empty, T shrinks from the whole cluster.
        let mut in_s = vec![false; n];
        let mut in_t = cluster.as_mask().to_vec();
        let (mut s_g, mut s_h) = (CutTracker::new(&g_op), CutTracker::new(h));
        let (mut t_g, mut t_h) = (CutTracker::new(&g_op), CutTracker::new(h));
        for &v in &members {
            t_g.insert(v, |u| in_s[u]);
            t_h.insert(v, |u| in_s[u]);
            in_s[v] = true;
        }
        in_s.iter_mut().for_each(|b| *b = false);

        let mut best: Option<(f64, usize)> = None;
        for (i, &v) in members[..members.len() - 1].iter().enumerate() {
            s_g.insert(v, |u| in_s[u]);
            s_h.insert(v, |u| in_s[u]);
            t_g.remove(v, |u| in_t[u]);
            t_h.remove(v, |u| in_t[u]);
            in_s[v] = true;
            in_t[v] = false;
            let worst = ratio(s_g.cut(), s_h.cut(), zero_tol)
                .max(ratio(t_g.cut(), t_h.cut(), zero_tol));
            if worst.is_finite() && best.map_or(true, |(b, _)| worst < b) {
                best = Some((worst, i + 1));
            }
        }
        if let Some((worst, len)) = best {
            if worst < current {
                for &v in &members[..len] {
                    labels[v] = next_label;
                }
                next_label += 1;
            }
        }
    }
    Ok(Partition::new(&labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Triangles {0,1,2} and {3,4,5} joined by a 0.1 edge between 2 and 3.
    fn two_triangles() -> WeightedGraph {
        WeightedGraph::from_edges(
            6,
            [
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
                (2, 3, 0.1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn partition_relabels_by_first_appearance() {
        let p = Partition::new(&[7, 7, 3, 9, 3]);
        assert_eq!(p.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.k(), 3);
        assert_eq!(p.sizes(), vec![2, 2, 1]);
    }

    #[test]
    fn sweep_on_separating_vector_finds_bridge() {
        let g = two_triangles();
        let h = WeightedGraph::from_edges(6, [(0, 5, 2.0)]).unwrap();
        let lh = LaplacianOperator::from_graph(&h);
        let x = [-1.0, -1.0, -0.9, 0.9, 1.0, 1.0];
        let s = cheeger_sweep(&g, &lh, &x).unwrap();
        assert_eq!(s.cut_set.iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_relative_eq!(s.ratio_gh, 0.05, epsilon = 1e-12);
        assert_eq!(s.partition().labels(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn sweep_matches_quadratic_prefix_recomputation() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..20 {
            let n = 14;
            let g = WeightedGraph::from_edges(
                n,
                (1..n).map(|v| (rng.random_range(0..v), v, rng.random_range(0.1..1.0))),
            )
            .unwrap();
            let h = WeightedGraph::from_edges(
                n,
                (0..8).map(|_| {
                    let u = rng.random_range(0..n - 1);
                    (u, rng.random_range(u + 1..n), rng.random_range(0.1..1.0))
                }),
            )
            .unwrap();
            let dh = g.degrees();
            let lh = LaplacianOperator::new(n, Some(&h), Some((0.05 * trial as f64, &dh))).unwrap();
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = cheeger_sweep(&g, &lh, &x).unwrap();

            // O(n·m) oracle: rebuild every prefix and cut it from scratch
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
            let mut best = f64::INFINITY;
            let mut best_gk = f64::INFINITY;
            for len in 1..n {
                let set = VertexSet::from_indices(n, order[..len].iter().copied()).unwrap();
                let (cg, ch) = (g.cut(&set).unwrap(), lh.cut(&set).unwrap());
                if ch > 1e-12 {
                    best = best.min(cg / ch);
                }
                best_gk = best_gk.min(cg / g.degrees().demand_cut(&set).unwrap());
            }
            assert_relative_eq!(s.ratio_gh, best, max_relative = 1e-9);
            assert_relative_eq!(s.ratio_gk, best_gk, max_relative = 1e-9);
            assert_relative_eq!(
                s.ratio_gh,
                g.cut(&s.cut_set).unwrap() / lh.cut(&s.cut_set).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn sweep_errors() {
        let g = two_triangles();
        let empty = WeightedGraph::empty(6);
        let lh = LaplacianOperator::from_graph(&empty);
        assert!(matches!(
            cheeger_sweep(&g, &lh, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]),
            Err(Error::IllPosed(_))
        ));
        let h = WeightedGraph::from_edges(6, [(0, 5, 1.0)]).unwrap();
        let lh = LaplacianOperator::from_graph(&h);
        assert!(matches!(
            cheeger_sweep(&g, &lh, &[1.0; 6]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn kmeans_exact_locations() {
        let pts = DMatrix::from_row_slice(
            6,
            2,
            &[0.0, 0.0, 5.0, 5.0, 0.0, 0.0, 5.0, 5.0, -3.0, 4.0, -3.0, 4.0],
        );
        let r = kmeans_masked(&pts, None, 3, KMeansOptions::default()).unwrap();
        assert_eq!(r.partition.labels(), &[0, 1, 0, 1, 2, 2]);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn kmeans_two_arcs_on_circle_any_seed() {
        let mut rows = Vec::new();
        for i in 0..20 {
            let t = 0.02 * i as f64;
            rows.extend_from_slice(&[t.cos(), t.sin()]);
        }
        for i in 0..20 {
            let t = std::f64::consts::PI + 0.02 * i as f64;
            rows.extend_from_slice(&[t.cos(), t.sin()]);
        }
        let pts = DMatrix::from_row_slice(40, 2, &rows);
        for seed in 0..25 {
            let p = kmeans(&pts, 2, 1, 100, seed).unwrap();
            let expected: Vec<usize> = (0..40).map(|i| (i >= 20) as usize).collect();
            assert_eq!(p.labels(), expected.as_slice(), "seed {seed}");
        }
    }

    #[test]
    fn kmeans_is_deterministic() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = DMatrix::from_fn(200, 3, |_, _| rng.random_range(-1.0..1.0));
        let a = kmeans_masked(&pts, None, 5, KMeansOptions { seed: 9, ..Default::default() }).unwrap();
        let b = kmeans_masked(&pts, None, 5, KMeansOptions { seed: 9, ..Default::default() }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.partition.k(), 5);
    }

    #[test]
    fn kmeans_objective_never_increases() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let ids: Vec<usize> = (0..300).collect();
        for seed in 0..10 {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let run = lloyd(&rows, &ids, 6, 100, &mut r);
            for w in run.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", run.history);
            }
        }
    }

    #[test]
    fn kmeans_rejects_too_few_distinct_points() {
        let pts = DMatrix::from_row_slice(4, 1, &[1.0, 1.0, 2.0, 2.0]);
        assert!(matches!(kmeans(&pts, 3, 2, 10, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(kmeans(&pts, 2, 0, 10, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn masked_rows_follow_nearest_centroid() {
        let pts = DMatrix::from_row_slice(5, 1, &[0.0, 0.1, 10.0, 10.1, 9.0]);
        let mask = [true, true, true, true, false];
        let r = kmeans_masked(&pts, Some(&mask), 2, KMeansOptions::default()).unwrap();
        assert_eq!(r.partition.labels(), &[0, 0, 1, 1, 1]);
    }

    #[test]
    fn refinement_keeps_optimal_partition() {
        let g = two_triangles();
        let h = WeightedGraph::from_edges(6, [(0, 5, 1.0), (1, 4, 1.0)]).unwrap();
        let lh = LaplacianOperator::from_graph(&h);
        let p = Partition::new(&[0, 0, 0, 1, 1, 1]);
        let l = [1.0, 0.5, 0.2, 0.2, 0.5, 1.0];
        assert_eq!(refine_per_component_sweep(&p, &l, &g, &lh).unwrap(), p);
    }

    #[test]
    fn refinement_splits_single_cluster() {
        let g = two_triangles();
        let h = WeightedGraph::from_edges(6, [(0, 5, 1.0)]).unwrap();
        let lh = LaplacianOperator::from_graph(&h);
        let p = Partition::new(&[0; 6]);
        let l = [0.9, 0.8, 0.7, 0.3, 0.2, 0.1];
        let refined = refine_per_component_sweep(&p, &l, &g, &lh).unwrap();
        assert_eq!(refined.k(), 2);
        assert_eq!(refined.labels(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn refinement_splits_blobs_separated_in_h() {
        // cluster {0..5} holds two triangles pulled apart by H; {6,7} is a
        // separate cluster linked to both
        let mut edges = vec![
            (0, 1, 1.0),
            (1, 2, 1.0),
            (0, 2, 1.0),
            (3, 4, 1.0),
            (4, 5, 1.0),
            (3, 5, 1.0),
            (2, 3, 0.2),
            (6, 7, 1.0),
        ];
        edges.push((5, 6, 0.5));
        edges.push((0, 7, 0.5));
        let g = WeightedGraph::from_edges(8, edges).unwrap();
        let h = WeightedGraph::from_edges(
            8,
            [(0, 4, 1.0), (1, 5, 1.0), (2, 3, 1.0), (0, 6, 1.0), (5, 7, 1.0)],
        )
        .unwrap();
        let lh = LaplacianOperator::from_graph(&h);
        let p = Partition::new(&[0, 0, 0, 0, 0, 0, 1, 1]);
        let l = [0.1, 0.2, 0.3, 0.7, 0.8, 0.9, 0.5, 0.5];
        let refined = refine_per_component_sweep(&p, &l, &g, &lh).unwrap();
        assert_eq!(refined.k(), 3);
        let before = crate::metrics::badness(&g, &lh, &p).unwrap();
        let blob_a = VertexSet::from_indices(8, [0, 1, 2]).unwrap();
        let blob_b = VertexSet::from_indices(8, [3, 4, 5]).unwrap();
        let phi = |s: &VertexSet| g.cut(s).unwrap() / lh.cut(s).unwrap();
        assert!(phi(&blob_a).max(phi(&blob_b)) < before.per_cluster_badness[0]);
        assert_eq!(refined.labels()[..6], [0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn refinement_leaves_singletons() {
        let g = two_triangles();
        let h = WeightedGraph::from_edges(6, [(0, 5, 1.0)]).unwrap();
        let lh = LaplacianOperator::from_graph(&h);
        let p = Partition::new(&[0, 1, 2, 3, 4, 5]);
        assert_eq!(refine_per_component_sweep(&p, &[1.0; 6], &g, &lh).unwrap(), p);
    }
}

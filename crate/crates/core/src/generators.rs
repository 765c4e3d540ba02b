//! Synthetic point clouds, the NoisyKnn graph ensemble and constraint sampling.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::merge::{Constraint, ConstraintSet};

/// Coordinate noise used when none is given.
pub const DEFAULT_MOON_NOISE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPointCloud {
    pub points: Vec<[f64; 2]>,
    /// Ground-truth cluster per point, `0..k`.
    pub labels: Vec<usize>,
}

impl LabeledPointCloud {
    pub fn new(points: Vec<[f64; 2]>, labels: Vec<usize>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        Ok(LabeledPointCloud { points, labels })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Number of distinct labels.
    pub fn k(&self) -> usize {
        let mut seen: Vec<usize> = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// Two side-by-side pairs of interleaved half circles of radius 1.
///
/// Moons face up, down, up, down with centers `(0, 0)`, `(1, 0.5)`, `(3, 0)`
/// and `(4, 0.5)`; neighboring arcs are 0.5 apart.
///
/// Point `i` belongs to moon `i % 4`; its angle is uniform on `[0, π]`.
pub fn four_moons(n: usize, noise_sd: f64, seed: u64) -> Result<LabeledPointCloud> {
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(Error::InvalidArgument(format!("noise_sd must be >= 0, got {noise_sd}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let moon = i % 4;
        let t = rng.random_range(0.0..=std::f64::consts::PI);
        let (cx, cy, up) = match moon {
            0 => (0.0, 0.0, 1.0),
            1 => (1.0, 0.5, -1.0),
            2 => (3.0, 0.0, 1.0),
            _ => (4.0, 0.5, -1.0),
        };
        let mut x = cx + t.cos() * up;
        let mut y = cy + t.sin() * up;
        if noise_sd > 0.0 {
            x += noise.sample(&mut rng);
            y += noise.sample(&mut rng);
        }
        points.push([x, y]);
        labels.push(moon);
    }
    LabeledPointCloud::new(points, labels)
}

/// Indices of the `k` nearest other points of every point, ties broken by index.
pub fn knn_lists(points: &[[f64; 2]], k: usize) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    if k >= n {
        return Err(Error::InvalidArgument(format!("k_g = {k} must be below n = {n}")));
    }
    let dist = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    Ok((0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (dist(&points[i], &points[j]), j))
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k > 0 && k < others.len() {
                others.select_nth_unstable_by(k - 1, cmp);
            }
            others.truncate(k);
            others.sort_by(cmp);
            others.into_iter().map(|(_, j)| j).collect()
        })
        .collect())
}

/// Unordered pairs `u < v` of an Erdős–Rényi graph with edge probability `p`,
/// in lexicographic order. Uses geometric skips, so the cost is linear in the
/// output size.
pub fn erdos_renyi_pairs(n: usize, p: f64, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    if n < 2 || p <= 0.0 {
        return pairs;
    }
    if p >= 1.0 {
        for u in 0..n {
            for v in u + 1..n {
                pairs.push((u, v));
            }
        }
        return pairs;
    }
    let log_q = (1.0 - p).ln();
    let limit = (n * n) as f64;
    let (mut u, mut v) = (0usize, 0usize);
    loop {
        let r: f64 = rng.random::<f64>();
        let skip = ((1.0 - r).ln() / log_q).floor().min(limit) as usize;
        v += 1 + skip;
        while v >= n && u < n - 1 {
            v = v - n + u + 2;
            u += 1;
        }
        if u >= n - 1 {
            return pairs;
        }
        pairs.push((u, v));
    }
}

/// The NoisyKnn ensemble: the symmetrized `k_g`-nearest-neighbor graph united
/// with an Erdős–Rényi graph of edge probability `l_g / n`; every edge has
/// weight 1.
pub fn noisy_knn(points: &LabeledPointCloud, k_g: usize, l_g: f64, seed: u64) -> Result<WeightedGraph> {
    let n = points.n();
    if !(l_g >= 0.0) {
        return Err(Error::InvalidArgument(format!("l_g must be >= 0, got {l_g}")));
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, list) in knn_lists(&points.points, k_g)?.into_iter().enumerate() {
        pairs.extend(list.into_iter().map(|j| (i.min(j), i.max(j))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs.extend(erdos_renyi_pairs(n, l_g / n as f64, &mut rng));
    pairs.sort_unstable();
    pairs.dedup();
    WeightedGraph::from_edges(n, pairs.into_iter().map(|(u, v)| (u, v, 1.0)))
}

/// Samples `m` vertices without replacement and links every pair of them:
/// must-link for equal labels, cannot-link otherwise.
pub fn sample_constraints(labels: &[usize], m: usize, seed: u64) -> Result<ConstraintSet> {
    let n = labels.len();
    if m > n {
        return Err(Error::InvalidArgument(format!("cannot sample {m} of {n} vertices")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = sample(&mut rng, n, m).into_vec();
    chosen.sort_unstable();
    Ok(clique_constraints(labels, &chosen))
}

/// Pairwise constraints among `vertices` according to `labels`.
pub fn clique_constraints(labels: &[usize], vertices: &[usize]) -> ConstraintSet {
    let mut c = ConstraintSet::new();
    for (a, &u) in vertices.iter().enumerate() {
        for &v in &vertices[a + 1..] {
            if labels[u] == labels[v] {
                c.must_link.push(Constraint::new(u, v));
            } else {
                c.cannot_link.push(Constraint::new(u, v));
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_moons_lie_on_arcs() {
        let cloud = four_moons(400, 0.0, 1).unwrap();
        let centers = [(0.0, 0.0, 1.0), (1.0, 0.5, -1.0), (3.0, 0.0, 1.0), (4.0, 0.5, -1.0)];
        for (p, &l) in cloud.points.iter().zip(&cloud.labels) {
            let (cx, cy, up) = centers[l];
            let r = ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
            assert!((p[1] - cy) * up >= -1e-12);
        }
    }

    #[test]
    fn moons_split_evenly() {
        let cloud = four_moons(1500, 0.1, 3).unwrap();
        let mut sizes = [0; 4];
        cloud.labels.iter().for_each(|&l| sizes[l] += 1);
        assert_eq!(sizes, [375; 4]);
        assert_eq!(cloud.k(), 4);
        let uneven = four_moons(10, 0.1, 3).unwrap();
        let mut sizes = [0; 4];
        uneven.labels.iter().for_each(|&l| sizes[l] += 1);
        assert_eq!(sizes, [3, 3, 2, 2]);
    }

    #[test]
    fn moons_are_seeded() {
        assert_eq!(four_moons(100, 0.1, 5).unwrap(), four_moons(100, 0.1, 5).unwrap());
        assert_ne!(four_moons(100, 0.1, 5).unwrap(), four_moons(100, 0.1, 6).unwrap());
    }

    #[test]
    fn knn_brute_force_oracle() {
        let cloud = four_moons(60, 0.1, 2).unwrap();
        let lists = knn_lists(&cloud.points, 5).unwrap();
        for (i, list) in lists.iter().enumerate() {
            let mut all: Vec<(f64, usize)> = (0..60)
                .filter(|&j| j != i)
                .map(|j| {
                    let (a, b) = (cloud.points[i], cloud.points[j]);
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2), j)
                })
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let expected: Vec<usize> = all[..5].iter().map(|e| e.1).collect();
            assert_eq!(list, &expected);
        }
        assert!(knn_lists(&cloud.points, 60).is_err());
    }

    #[test]
    fn pure_knn_without_noise() {
        let cloud = four_moons(80, 0.05, 4).unwrap();
        let g = noisy_knn(&cloud, 4, 0.0, 0).unwrap();
        let lists = knn_lists(&cloud.points, 4).unwrap();
        let mut expected = 0;
        for u in 0..80 {
            for v in u + 1..80 {
                if lists[u].contains(&v) || lists[v].contains(&u) {
                    expected += 1;
                    assert_eq!(g.weight(u, v), 1.0);
                }
            }
        }
        assert_eq!(g.num_edges(), expected);
        assert!(g.edges().all(|(u, v, w)| u < v && w == 1.0));
    }

    #[test]
    fn erdos_renyi_edge_count_is_binomial() {
        let (n, p) = (1500usize, 15.0 / 1500.0);
        let trials = 50;
        let pairs_total = (n * (n - 1) / 2) as f64;
        let mean_expected = pairs_total * p;
        let sd = (pairs_total * p * (1.0 - p)).sqrt();
        let mut total = 0usize;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs = erdos_renyi_pairs(n, p, &mut rng);
            assert!(pairs.windows(2).all(|w| w[0] < w[1]));
            assert!(pairs.iter().all(|&(u, v)| u < v && v < n));
            total += pairs.len();
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - mean_expected).abs() < 3.0 * sd / (trials as f64).sqrt(), "{mean}");
    }

    #[test]
    fn erdos_renyi_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(erdos_renyi_pairs(10, 0.0, &mut rng).is_empty());
        assert_eq!(erdos_renyi_pairs(10, 1.0, &mut rng).len(), 45);
        assert!(erdos_renyi_pairs(1, 0.5, &mut rng).is_empty());
    }

    #[test]
    fn clique_expansion() {
        let c = clique_constraints(&[0, 0, 1], &[0, 1, 2]);
        assert_eq!(c.must_link, vec![Constraint::new(0, 1)]);
        assert_eq!(c.cannot_link, vec![Constraint::new(0, 2), Constraint::new(1, 2)]);
    }

    #[test]
    fn sampled_constraints_are_consistent() {
        let cloud = four_moons(1500, 0.1, 0).unwrap();
        let c = sample_constraints(&cloud.labels, 75, 9).unwrap();
        assert_eq!(c.len(), 75 * 74 / 2);
        assert!(c.must_link.iter().all(|e| cloud.labels[e.u] == cloud.labels[e.v]));
        assert!(c.cannot_link.iter().all(|e| cloud.labels[e.u] != cloud.labels[e.v]));
        assert!(sample_constraints(&cloud.labels, 1, 0).unwrap().is_empty());
        assert!(sample_constraints(&cloud.labels, 1501, 0).is_err());
    }
}

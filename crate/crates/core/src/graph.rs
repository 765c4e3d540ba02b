//! Sparse weighted graphs in compressed-row form.
//!
//! Every undirected edge is stored in both directions so that Laplacian
//! products, degrees and cuts are single linear scans over the adjacency.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Coalesced weights below this are treated as zero and rejected.
pub const MIN_EDGE_WEIGHT: f64 = 1e-12;

/// Symmetric sparse graph with strictly positive edge weights and no self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl WeightedGraph {
    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Self {
        WeightedGraph {
            n,
            offsets: vec![0; n + 1],
            targets: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Builds a graph from undirected `(u, v, w)` triples.
    ///
    /// Each edge should be listed once; repeated pairs (in either
    /// orientation) are coalesced by summing their weights.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut list = Vec::new();
        for (u, v, w) in edges {
            for vertex in [u, v] {
                if vertex >= n {
                    return Err(Error::VertexOutOfRange { vertex, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidWeight { u, v, weight: w });
            }
            list.push((u.min(v), u.max(v), w));
        }
        // Sorting on the weight as well makes the summation order of
        // duplicates independent of input order.
        list.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));

        let mut coalesced: Vec<(usize, usize, f64)> = Vec::with_capacity(list.len());
        for (u, v, w) in list {
            match coalesced.last_mut() {
                Some(last) if last.0 == u && last.1 == v => last.2 += w,
                _ => coalesced.push((u, v, w)),
            }
        }
        if let Some(&(u, v, weight)) = coalesced.iter().find(|e| e.2 < MIN_EDGE_WEIGHT) {
            return Err(Error::InvalidWeight { u, v, weight });
        }
        Ok(Self::from_sorted_unique(n, &coalesced))
    }

    /// `edges` must be sorted by `(u, v)` with `u < v` and no duplicates.
    fn from_sorted_unique(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(u, v, _) in edges {
            counts[u + 1] += 1;
            counts[v + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts;
        let mut cursor = offsets.clone();
        let mut targets = vec![0usize; 2 * edges.len()];
        let mut weights = vec![0.0; 2 * edges.len()];
        for &(u, v, w) in edges {
            for (a, b) in [(u, v), (v, u)] {
                targets[cursor[a]] = b;
                weights[cursor[a]] = w;
                cursor[a] += 1;
            }
        }
        let mut row: Vec<(usize, f64)> = Vec::new();
        for u in 0..n {
            let range = offsets[u]..offsets[u + 1];
            row.clear();
            row.extend(targets[range.clone()].iter().copied().zip(weights[range.clone()].iter().copied()));
            row.sort_unstable_by_key(|e| e.0);
            for (slot, (t, w)) in range.zip(row.iter()) {
                targets[slot] = *t;
                weights[slot] = *w;
            }
        }
        WeightedGraph {
            n,
            offsets,
            targets,
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    /// Neighbors of `u` with edge weights, in ascending neighbor order.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[u]..self.offsets[u + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&(v, _)| v > u)
                .map(move |(v, w)| (u, v, w))
        })
    }

    /// Weight of edge `(u, v)`, zero if absent.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        let range = self.offsets[u]..self.offsets[u + 1];
        match self.targets[range.clone()].binary_search(&v) {
            Ok(pos) => self.weights[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn degree(&self, u: usize) -> f64 {
        self.weights[self.offsets[u]..self.offsets[u + 1]].iter().sum()
    }

    pub fn degrees(&self) -> DegreeVector {
        DegreeVector::new((0..self.n).map(|u| self.degree(u)).collect())
    }

    /// `Σ_edges w_uv (x_u − x_v)²`.
    pub fn laplacian_quadratic(&self, x: &[f64]) -> Result<f64> {
        check_len(self.n, x.len())?;
        Ok(self
            .edges()
            .map(|(u, v, w)| {
                let diff = x[u] - x[v];
                w * diff * diff
            })
            .sum())
    }

    /// Writes `L x` into `out`. Lengths are not checked.
    pub(crate) fn laplacian_apply_into(&self, x: &[f64], out: &mut [f64]) {
        for u in 0..self.n {
            let mut acc = 0.0;
            for k in self.offsets[u]..self.offsets[u + 1] {
                acc += self.weights[k] * (x[u] - x[self.targets[k]]);
            }
            out[u] = acc;
        }
    }

    pub fn laplacian_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        let mut out = vec![0.0; self.n];
        self.laplacian_apply_into(x, &mut out);
        Ok(out)
    }

    /// Total weight of edges with exactly one endpoint in `s`.
    pub fn cut(&self, s: &VertexSet) -> Result<f64> {
        check_len(self.n, s.universe())?;
        Ok(self
            .edges()
            .filter(|&(u, v, _)| s.contains(u) != s.contains(v))
            .map(|(_, _, w)| w)
            .sum())
    }

    /// Edge-wise sum of two graphs on the same vertex set.
    pub fn add(&self, other: &WeightedGraph) -> Result<WeightedGraph> {
        check_len(self.n, other.n)?;
        WeightedGraph::from_edges(self.n, self.edges().chain(other.edges()))
    }

    /// Connected component id per vertex (ids in order of first vertex) and the count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for root in 0..self.n {
            if label[root] != usize::MAX {
                continue;
            }
            label[root] = count;
            stack.push(root);
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.components().1 == 1
    }

    /// Subgraph induced by `vertices` (old ids, in the order given), relabeled `0..len`.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<WeightedGraph> {
        let mut new_id = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            if v >= self.n {
                return Err(Error::VertexOutOfRange { vertex: v, n: self.n });
            }
            new_id[v] = i;
        }
        let edges = self
            .edges()
            .filter(|&(u, v, _)| new_id[u] != usize::MAX && new_id[v] != usize::MAX)
            .map(|(u, v, w)| (new_id[u], new_id[v], w));
        WeightedGraph::from_edges(vertices.len(), edges)
    }

    /// Largest connected component and the map from its vertex ids to the
    /// original ids. Ties go to the component containing the smallest id.
    pub fn largest_component(&self) -> Result<(WeightedGraph, Vec<usize>)> {
        let (label, count) = self.components();
        let mut sizes = vec![0usize; count];
        for &c in &label {
            sizes[c] += 1;
        }
        let best = (0..count)
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let keep: Vec<usize> = (0..self.n).filter(|&v| label[v] == best).collect();
        Ok((self.induced_subgraph(&keep)?, keep))
    }

    /// Dense Laplacian matrix; intended for small graphs.
    pub fn dense_laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for (u, v, w) in self.edges() {
            l[(u, v)] -= w;
            l[(v, u)] -= w;
            l[(u, u)] += w;
            l[(v, v)] += w;
        }
        l
    }
}

/// Weighted degrees `d_i` together with the volume `Σ d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector {
    d: Vec<f64>,
    vol: f64,
}

impl DegreeVector {
    pub fn new(d: Vec<f64>) -> Self {
        let vol = d.iter().sum();
        DegreeVector { d, vol }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn vol(&self) -> f64 {
        self.vol
    }

    pub fn min(&self) -> f64 {
        self.d.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.d.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.vol / self.d.len() as f64
    }

    /// Total degree of the vertices in `s`.
    pub fn volume_of(&self, s: &VertexSet) -> Result<f64> {
        check_len(self.d.len(), s.universe())?;
        Ok(s.iter().map(|i| self.d[i]).sum())
    }

    /// Cut of `s` in the demand graph `K_ij = d_i d_j / vol`:
    /// `vol(S) vol(S̄) / vol(V)`.
    pub fn demand_cut(&self, s: &VertexSet) -> Result<f64> {
        if self.vol <= 0.0 {
            return Err(Error::EmptyGraph);
        }
        let inside = self.volume_of(s)?;
        Ok(inside * (self.vol - inside) / self.vol)
    }

    /// `x^T (D − d dᵀ / vol) x`, the demand-graph Laplacian quadratic form.
    pub fn demand_quadratic(&self, x: &[f64]) -> Result<f64> {
        check_len(self.d.len(), x.len())?;
        if self.vol <= 0.0 {
            return Err(Error::EmptyGraph);
        }
        let diag: f64 = self.d.iter().zip(x).map(|(d, x)| d * x * x).sum();
        let dot: f64 = self.d.iter().zip(x).map(|(d, x)| d * x).sum();
        Ok(diag - dot * dot / self.vol)
    }
}

/// Subset of `0..n` stored as an indicator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    members: Vec<bool>,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet {
            members: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        VertexSet {
            members: vec![true; n],
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, indices: I) -> Result<Self> {
        let mut set = Self::empty(n);
        for i in indices {
            if i >= n {
                return Err(Error::VertexOutOfRange { vertex: i, n });
            }
            set.members[i] = true;
        }
        Ok(set)
    }

    pub fn from_mask(members: Vec<bool>) -> Self {
        VertexSet { members }
    }

    /// Size of the ambient vertex range.
    pub fn universe(&self) -> usize {
        self.members.len()
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&b| b)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn insert(&mut self, i: usize) {
        self.members[i] = true;
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    pub fn complement(&self) -> VertexSet {
        VertexSet {
            members: self.members.iter().map(|b| !b).collect(),
        }
    }

    pub fn indicator(&self) -> Vec<f64> {
        self.members
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn as_mask(&self) -> &[bool] {
        &self.members
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

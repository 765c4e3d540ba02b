//! Shared fixtures and reference computations for the integration tests.
#![allow(dead_code)]

use fastge::graph::WeightedGraph;
use fastge::merge::{Constraint, ConstraintSet};
use fastge::operators::LaplacianOperator;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Triangles {0,1,2} and {3,4,5} joined by a 0.1 edge between 2 and 3.
pub fn two_triangles() -> WeightedGraph {
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

/// Random spanning tree plus `extra` random edges; always connected.
pub fn random_connected(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> WeightedGraph {
    let mut edges: Vec<(usize, usize, f64)> = (1..n)
        .map(|v| (rng.random_range(0..v), v, rng.random_range(0.1..2.0)))
        .collect();
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.push((u, v, rng.random_range(0.1..2.0)));
        }
    }
    WeightedGraph::from_edges(n, edges).unwrap()
}

/// Random graph on `n` vertices with `m` edge draws; may be disconnected.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize) -> WeightedGraph {
    let edges: Vec<(usize, usize, f64)> = (0..m)
        .filter_map(|_| {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            (u != v).then(|| (u, v, rng.random_range(0.1..2.0)))
        })
        .collect();
    WeightedGraph::from_edges(n, edges).unwrap()
}

/// `count` cannot-link pairs with distinct endpoints.
pub fn random_cannot_links(rng: &mut ChaCha8Rng, n: usize, count: usize) -> ConstraintSet {
    let mut c = ConstraintSet::new();
    while c.cannot_link.len() < count {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            c.cannot_link.push(Constraint::new(u, v));
        }
    }
    c
}

/// Orthonormal basis of the complement of the constant vector (Helmert).
pub fn helmert(n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n - 1);
    for j in 0..n - 1 {
        let m = (j + 1) as f64;
        let s = 1.0 / (m * (m + 1.0)).sqrt();
        for i in 0..=j {
            q[(i, j)] = s;
        }
        q[(j + 1, j)] = -m * s;
    }
    q
}

/// Reference eigenvalues of `L_G x = λ L_H x` on the complement of the
/// constants, ascending, dropping infinite ones.
///
/// Uses `A^{-1/2} B A^{-1/2}` with `A`, `B` the restricted dense
/// Laplacians built entry by entry from the operators.
pub fn pencil_eigenvalues(lg: &LaplacianOperator, lh: &LaplacianOperator) -> Vec<f64> {
    let n = lg.dim();
    let dense = |op: &LaplacianOperator| {
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = op.apply(&e).unwrap();
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    };
    let q = helmert(n);
    let a = q.transpose() * dense(lg) * &q;
    let b = q.transpose() * dense(lh) * &q;
    let ea = SymmetricEigen::new((&a + a.transpose()) * 0.5);
    let inv_sqrt = &ea.eigenvectors
        * DMatrix::from_diagonal(&ea.eigenvalues.map(|v| 1.0 / v.sqrt()))
        * ea.eigenvectors.transpose();
    let c = &inv_sqrt * b * &inv_sqrt;
    let ec = SymmetricEigen::new((&c + c.transpose()) * 0.5);
    let top = ec.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut values: Vec<f64> = ec
        .eigenvalues
        .iter()
        .filter(|&&mu| mu > 1e-10 * top)
        .map(|mu| 1.0 / mu)
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Pearson correlation of two vectors.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += (x - ma) * (y - mb);
        aa += (x - ma) * (x - ma);
        bb += (y - mb) * (y - mb);
    }
    ab / (aa * bb).sqrt()
}

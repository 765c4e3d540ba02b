//! Vertex embedding from generalized eigenvectors.
//!
//! Each eigenvector is shifted by a multiple of the constant vector so that
//! it becomes orthogonal to the degree vector `d` (both Laplacians annihilate
//! constants, so any shift is still an eigenvector), scaled to unit `L_H`
//! norm, and then every vertex row is projected onto the unit sphere.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DegreeVector;
use crate::operators::{norm, LaplacianOperator};

/// Relative threshold for degenerate columns and zero rows.
pub const DEGENERACY_EPS: f64 = 1e-10;

/// Which degree vector defines the representative of each eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingDegrees {
    /// Degrees of the merged graph `G = G_D + Ĝ_ML`.
    #[default]
    Merged,
    /// Degrees of the data graph `G_D`.
    Data,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingResult {
    /// `n × k` with unit-norm rows; rows of vertices with a zero embedding stay zero.
    pub u: DMatrix<f64>,
    /// Row norms before normalization.
    pub l: Vec<f64>,
}

impl EmbeddingResult {
    pub fn is_zero_row(&self, j: usize) -> bool {
        self.l[j] == 0.0
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        self.u.row(j).iter().copied().collect()
    }
}

/// Shifts `x` along the constants so that `x · d = 0`.
pub fn d_orthogonal_representative(x: &[f64], d: &DegreeVector) -> Result<Vec<f64>> {
    crate::graph::check_len(d.len(), x.len())?;
    if d.vol() <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let shift = x.iter().zip(d.as_slice()).map(|(a, b)| a * b).sum::<f64>() / d.vol();
    Ok(x.iter().map(|a| a - shift).collect())
}

pub fn compute_embedding(
    x: &DMatrix<f64>,
    lh: &LaplacianOperator,
    d: &DegreeVector,
) -> Result<EmbeddingResult> {
    let (n, k) = x.shape();
    crate::graph::check_len(lh.dim(), n)?;
    crate::graph::check_len(d.len(), n)?;

    let mut raw = DMatrix::zeros(n, k);
    for j in 0..k {
        let column: Vec<f64> = x.column(j).iter().copied().collect();
        let v = d_orthogonal_representative(&column, d)?;
        let hv = lh.apply(&v)?;
        let q: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
        if q <= DEGENERACY_EPS * norm(&v) * norm(&hv) || q <= 0.0 {
            return Err(Error::DegenerateEigenvector(j));
        }
        let s = q.sqrt();
        for i in 0..n {
            raw[(i, j)] = v[i] / s;
        }
    }

    let mut l: Vec<f64> = (0..n).map(|i| raw.row(i).norm()).collect();
    let max_l = l.iter().copied().fold(0.0, f64::max);
    let mut u = raw;
    for i in 0..n {
        if l[i] <= DEGENERACY_EPS * max_l {
            l[i] = 0.0;
            u.row_mut(i).fill(0.0);
        } else {
            let inv = 1.0 / l[i];
            u.row_mut(i).scale_mut(inv);
        }
    }
    Ok(EmbeddingResult { u, l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn representative_is_d_orthogonal() {
        let d = DegreeVector::new(vec![1.0, 1.0]);
        let v = d_orthogonal_representative(&[1.0, 0.0], &d).unwrap();
        assert_eq!(v, vec![0.5, -0.5]);
        assert_eq!(v[0] * 1.0 + v[1] * 1.0, 0.0);
    }

    fn setup() -> (WeightedGraph, WeightedGraph, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let g = WeightedGraph::from_edges(
            n,
            (1..n).map(|v| (rng.random_range(0..v), v, rng.random_range(0.5..1.5))),
        )
        .unwrap();
        let h = WeightedGraph::from_edges(n, (0..n).map(|v| (v, (v + 5) % n, 1.0))).unwrap();
        let x = DMatrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0));
        (g, h, x)
    }

    #[test]
    fn columns_have_unit_h_norm_and_rows_unit_length() {
        let (g, h, x) = setup();
        let d = g.degrees();
        let lh = LaplacianOperator::from_graph(&h);
        let e = compute_embedding(&x, &lh, &d).unwrap();
        for i in 0..12 {
            assert_relative_eq!(e.u.row(i).norm(), 1.0, epsilon = 1e-12);
            assert!(e.l[i] >= 0.0);
        }
        // rebuild raw columns and check the normalization
        for j in 0..3 {
            let raw: Vec<f64> = (0..12).map(|i| e.u[(i, j)] * e.l[i]).collect();
            assert_relative_eq!(lh.quadratic(&raw).unwrap(), 1.0, epsilon = 1e-10);
            let dot: f64 = raw.iter().zip(d.as_slice()).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-10);
        }
    }

    #[test]
    fn representative_ignores_constant_shift() {
        let (g, h, x) = setup();
        let d = g.degrees();
        let lh = LaplacianOperator::from_graph(&h);
        let shifted = x.map(|v| v + 3.7);
        let a = compute_embedding(&x, &lh, &d).unwrap();
        let b = compute_embedding(&shifted, &lh, &d).unwrap();
        assert_relative_eq!(a.u, b.u, epsilon = 1e-9);
        for (p, q) in a.l.iter().zip(&b.l) {
            assert_relative_eq!(p, q, max_relative = 1e-9);
        }
    }

    #[test]
    fn constant_column_is_degenerate() {
        let (g, h, mut x) = setup();
        x.column_mut(1).fill(2.0);
        let lh = LaplacianOperator::from_graph(&h);
        assert!(matches!(
            compute_embedding(&x, &lh, &g.degrees()),
            Err(Error::DegenerateEigenvector(1))
        ));
    }

    #[test]
    fn zero_rows_stay_zero() {
        // vertices 0 and 1 sit at the d-weighted mean in every column
        let d = DegreeVector::new(vec![1.0; 4]);
        let h = WeightedGraph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let lh = LaplacianOperator::from_graph(&h);
        let x = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 1.0, -1.0]);
        let e = compute_embedding(&x, &lh, &d).unwrap();
        assert!(e.is_zero_row(0) && e.is_zero_row(1));
        assert_eq!(e.row(0), vec![0.0]);
        assert_relative_eq!(e.u[(2, 0)], 1.0);
        assert_relative_eq!(e.u[(3, 0)], -1.0);
    }
}

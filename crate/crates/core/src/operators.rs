//! Matrix-free Laplacian operators and a preconditioned CG solver.
//!
//! The demand graph `K_ij = d_i d_j / vol` is dense, so it is never built.
//! Its Laplacian `D − d dᵀ / vol` is applied as a diagonal plus a rank-one
//! correction, which costs one dot product per application.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{check_len, DegreeVector, VertexSet, WeightedGraph};

/// `L = L_sparse + c (D − d dᵀ / vol)`, either part optional.
#[derive(Debug, Clone, Copy)]
pub struct LaplacianOperator<'a> {
    n: usize,
    sparse: Option<&'a WeightedGraph>,
    rank_one: Option<(f64, &'a DegreeVector)>,
}

impl<'a> LaplacianOperator<'a> {
    pub fn new(
        n: usize,
        sparse: Option<&'a WeightedGraph>,
        rank_one: Option<(f64, &'a DegreeVector)>,
    ) -> Result<Self> {
        if let Some(g) = sparse {
            check_len(n, g.n())?;
        }
        if let Some((scale, d)) = rank_one {
            check_len(n, d.len())?;
            if !scale.is_finite() || scale < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "demand-graph scale must be finite and nonnegative, got {scale}"
                )));
            }
            if d.vol() <= 0.0 {
                return Err(Error::EmptyGraph);
            }
        }
        Ok(LaplacianOperator {
            n,
            sparse,
            rank_one,
        })
    }

    /// Laplacian of a single graph.
    pub fn from_graph(g: &'a WeightedGraph) -> Self {
        LaplacianOperator {
            n: g.n(),
            sparse: Some(g),
            rank_one: None,
        }
    }

    /// `scale · L_K` for the demand graph of degree vector `d`.
    pub fn demand(scale: f64, d: &'a DegreeVector) -> Result<Self> {
        Self::new(d.len(), None, Some((scale, d)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn sparse_part(&self) -> Option<&'a WeightedGraph> {
        self.sparse
    }

    pub fn rank_one_part(&self) -> Option<(f64, &'a DegreeVector)> {
        self.rank_one
    }

    /// True when the operator is identically zero.
    pub fn is_zero(&self) -> bool {
        let sparse_empty = self.sparse.map_or(true, |g| g.num_edges() == 0);
        let rank_one_empty = self.rank_one.map_or(true, |(c, _)| c == 0.0);
        sparse_empty && rank_one_empty
    }

    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self.sparse {
            Some(g) => g.laplacian_apply_into(x, out),
            None => out.iter_mut().for_each(|v| *v = 0.0),
        }
        if let Some((c, d)) = self.rank_one {
            let vol = d.vol();
            let d = d.as_slice();
            let dot: f64 = d.iter().zip(x).map(|(a, b)| a * b).sum();
            let mean = dot / vol;
            for i in 0..self.n {
                out[i] += c * d[i] * (x[i] - mean);
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        let mut out = vec![0.0; self.n];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// `xᵀ L x`, evaluated edge-wise for the sparse part.
    pub fn quadratic(&self, x: &[f64]) -> Result<f64> {
        check_len(self.n, x.len())?;
        let mut q = match self.sparse {
            Some(g) => g.laplacian_quadratic(x)?,
            None => 0.0,
        };
        if let Some((c, d)) = self.rank_one {
            q += c * d.demand_quadratic(x)?;
        }
        Ok(q)
    }

    /// Weight of the cut `(S, S̄)` in the graph this operator is the Laplacian of.
    pub fn cut(&self, s: &VertexSet) -> Result<f64> {
        check_len(self.n, s.universe())?;
        let mut total = match self.sparse {
            Some(g) => g.cut(s)?,
            None => 0.0,
        };
        if let Some((c, d)) = self.rank_one {
            total += c * d.demand_cut(s)?;
        }
        Ok(total)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut diag = match self.sparse {
            Some(g) => (0..self.n).map(|u| g.degree(u)).collect(),
            None => vec![0.0; self.n],
        };
        if let Some((c, d)) = self.rank_one {
            let vol = d.vol();
            for (out, &di) in diag.iter_mut().zip(d.as_slice()) {
                *out += c * di * (1.0 - di / vol);
            }
        }
        diag
    }

    /// Dense matrix of the operator; intended for small `n`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = match self.sparse {
            Some(g) => g.dense_laplacian(),
            None => DMatrix::zeros(self.n, self.n),
        };
        if let Some((c, d)) = self.rank_one {
            let d = d.as_slice();
            let vol: f64 = d.iter().sum();
            for i in 0..self.n {
                m[(i, i)] += c * d[i];
                for j in 0..self.n {
                    m[(i, j)] -= c * d[i] * d[j] / vol;
                }
            }
        }
        m
    }
}

/// Approximate inverse of a Laplacian (plus a tiny shift), applied as `z = M⁻¹ r`.
///
/// Implementations should be symmetric positive definite; [`InnerCg`] is
/// only approximately linear.
pub trait Preconditioner: Send + Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, r: &[f64], z: &mut [f64]);

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        self.apply_into(r, &mut z);
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreconditionerKind {
    /// No preconditioning.
    Identity,
    Jacobi,
    SymmetricGaussSeidel,
    /// A few symmetric-Gauss–Seidel-preconditioned CG steps on `L_G`.
    #[default]
    InnerCg,
}

/// CG steps taken by [`InnerCg`] per application.
pub const INNER_CG_STEPS: usize = 12;

/// Relative diagonal shift that keeps the preconditioner definite.
pub const PRECONDITIONER_SHIFT: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct IdentityPreconditioner {
    n: usize,
}

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

#[derive(Debug, Clone)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    /// From an operator diagonal; a shift of `PRECONDITIONER_SHIFT · mean(diag)` is added.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mean = diag.iter().sum::<f64>() / diag.len().max(1) as f64;
        let shift = PRECONDITIONER_SHIFT * mean.max(f64::MIN_POSITIVE);
        Jacobi {
            inv_diag: diag.iter().map(|d| 1.0 / (d + shift)).collect(),
        }
    }
}

impl Preconditioner for Jacobi {
    fn dim(&self) -> usize {
        self.inv_diag.len()
    }

    fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), s) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * s;
        }
    }
}

/// One forward and one backward Gauss–Seidel sweep on `L_G + σI`.
#[derive(Debug, Clone)]
pub struct SymmetricGaussSeidel {
    graph: WeightedGraph,
    diag: Vec<f64>,
}

impl Preconditioner for SymmetricGaussSeidel {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        // (D + L) y = r; the off-diagonal entries of L_G are −w.
        for i in 0..n {
            let mut acc = r[i];
            for (j, w) in self.graph.neighbors(i) {
                if j >= i {
                    break;
                }
                acc += w * z[j];
            }
            z[i] = acc / self.diag[i];
        }
        // (D + U) z = D y
        for i in (0..n).rev() {
            let mut acc = 0.0;
            for (j, w) in self.graph.neighbors(i) {
                if j > i {
                    acc += w * z[j];
                }
            }
            z[i] += acc / self.diag[i];
        }
    }
}

/// Fixed number of preconditioned CG steps on `L_G z = r` from `z = 0`.
#[derive(Debug, Clone)]
pub struct InnerCg {
    inner: SymmetricGaussSeidel,
    steps: usize,
}

impl InnerCg {
    pub fn new(g: &WeightedGraph, steps: usize) -> Self {
        let degrees = g.degrees();
        let shift = PRECONDITIONER_SHIFT * degrees.mean();
        InnerCg {
            inner: SymmetricGaussSeidel {
                graph: g.clone(),
                diag: degrees.as_slice().iter().map(|d| d + shift).collect(),
            },
            steps: steps.max(1),
        }
    }
}

impl Preconditioner for InnerCg {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, r: &[f64], x: &mut [f64]) {
        let n = r.len();
        let g = &self.inner.graph;
        let mut res = r.to_vec();
        project_out_constant(&mut res);
        x.iter_mut().for_each(|v| *v = 0.0);
        let mut z = vec![0.0; n];
        let mut ap = vec![0.0; n];
        self.inner.apply_into(&res, &mut z);
        project_out_constant(&mut z);
        let mut p = z.clone();
        let mut rz = dot(&res, &z);
        for step in 0..self.steps {
            if rz <= 0.0 {
                break;
            }
            g.laplacian_apply_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            axpy(alpha, &p, x);
            if step + 1 == self.steps {
                break;
            }
            axpy(-alpha, &ap, &mut res);
            self.inner.apply_into(&res, &mut z);
            project_out_constant(&mut z);
            let rz_next = dot(&res, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for (p, z) in p.iter_mut().zip(&z) {
                *p = z + beta * *p;
            }
        }
    }
}

/// Approximate inverse of `L_G` for the connected graph `g`.
pub fn build_preconditioner(
    g: &WeightedGraph,
    kind: PreconditionerKind,
) -> Result<Box<dyn Preconditioner>> {
    let (_, components) = g.components();
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    let degrees = g.degrees();
    Ok(match kind {
        PreconditionerKind::Identity => Box::new(IdentityPreconditioner { n: g.n() }),
        PreconditionerKind::Jacobi => Box::new(Jacobi::from_diagonal(degrees.as_slice())),
        PreconditionerKind::SymmetricGaussSeidel => {
            let shift = PRECONDITIONER_SHIFT * degrees.mean();
            Box::new(SymmetricGaussSeidel {
                graph: g.clone(),
                diag: degrees.as_slice().iter().map(|d| d + shift).collect(),
            })
        }
        PreconditionerKind::InnerCg => Box::new(InnerCg::new(g, INNER_CG_STEPS)),
    })
}

pub const DEFAULT_SOLVE_TOL: f64 = 1e-8;

pub fn default_max_iter(n: usize) -> usize {
    10 * (n as f64).sqrt().ceil() as usize + 200
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `L x = b` for mean-zero `x` with Jacobi-preconditioned CG.
pub fn solve(op: &LaplacianOperator, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let jacobi = Jacobi::from_diagonal(&op.diagonal());
    Ok(pcg(op, &jacobi, b, tol, max_iter)?.x)
}

/// Preconditioned conjugate gradient on the complement of the constant vector.
///
/// `b` is projected to mean zero first. Convergence is declared on the true
/// residual `‖L x − b‖ ≤ tol ‖b‖`.
pub fn pcg(
    op: &LaplacianOperator,
    precond: &dyn Preconditioner,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = op.dim();
    check_len(n, b.len())?;
    check_len(n, precond.dim())?;
    let mut rhs = b.to_vec();
    project_out_constant(&mut rhs);
    let b_norm = norm(&rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    let mut r = rhs.clone();
    let mut z = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut rel = 1.0;
    // Outer restarts recompute the true residual; the recurrence residual can
    // drift below tol before the true one does.
    while iterations < max_iter {
        precond.apply_into(&r, &mut z);
        project_out_constant(&mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            iterations += 1;
            op.apply_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            if norm(&r) <= tol * b_norm {
                break;
            }
            precond.apply_into(&r, &mut z);
            project_out_constant(&mut z);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for (p, z) in p.iter_mut().zip(&z) {
                *p = z + beta * *p;
            }
        }
        op.apply_into(&x, &mut ap);
        for i in 0..n {
            r[i] = rhs[i] - ap[i];
        }
        rel = norm(&r) / b_norm;
        if rel <= tol {
            project_out_constant(&mut x);
            return Ok(CgOutcome {
                x,
                iterations,
                relative_residual: rel,
            });
        }
    }
    Err(Error::SolverNotConverged {
        iterations,
        residual: rel,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

pub(crate) fn project_out_constant(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

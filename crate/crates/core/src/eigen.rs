//! Smallest eigenpairs of the Laplacian pencil `L_G x = λ L_H x`.
//!
//! Both matrices annihilate the constant vector, so the problem is posed on
//! its orthogonal complement, where `L_G` is positive definite for connected
//! `G`. `L_H` may have a larger null space (few cannot-link constraints);
//! those directions correspond to infinite eigenvalues.
//!
//! The iterative solver is block LOBPCG. Internally it maximizes the
//! reciprocal quotient `μ(x) = xᵀL_H x / xᵀL_G x`, which has the same
//! eigenvectors with `μ = 1/λ`. The residuals of the two formulations are
//! parallel (`L_H x − μ L_G x = −μ (L_G x − λ L_H x)`), so the search
//! directions produced by a preconditioner `T ≈ L_G⁻¹` are unchanged, but
//! Rayleigh–Ritz can be carried out in the `L_G` inner product, which stays
//! definite no matter how rank-deficient `L_H` is. Null directions of `L_H`
//! simply show up as `μ = 0` and are never selected.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{norm, LaplacianOperator, Preconditioner};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 500;

/// Relative eigenvalue cutoff of the Gram matrix below which a search
/// direction is treated as linearly dependent.
const RANK_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// `n × k`; every column satisfies `xᵀ L_H x = 1` and is orthogonal to the constants.
    pub vectors: DMatrix<f64>,
    /// `‖L_G x − λ L_H x‖ / (‖L_G x‖ + λ ‖L_H x‖)` per column.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl EigenSolution {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.vectors.nrows();
        &self.vectors.as_slice()[j * n..(j + 1) * n]
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_norms.iter().copied().fold(0.0, f64::max)
    }
}

/// Generalized Rayleigh quotient `xᵀL_G x / xᵀL_H x`.
pub fn rayleigh_quotient(
    lg: &LaplacianOperator,
    lh: &LaplacianOperator,
    x: &[f64],
) -> Result<f64> {
    Ok(lg.quadratic(x)? / lh.quadratic(x)?)
}

/// Block size used for `k` wanted pairs; the extra columns are discarded.
pub fn block_size(k: usize) -> usize {
    k + 2usize.max(k.div_ceil(2))
}

fn check_problem(lg: &LaplacianOperator, lh: &LaplacianOperator, k: usize) -> Result<usize> {
    let n = lg.dim();
    if lh.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lh.dim(),
        });
    }
    if k == 0 || k + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k <= n - 1, got k = {k} with n = {n}"
        )));
    }
    if lh.is_zero() {
        return Err(Error::IllPosed(
            "L_H is identically zero; add cannot-link constraints or the demand-graph term"
                .into(),
        ));
    }
    if let Some(g) = lg.sparse_part() {
        let (_, components) = g.components();
        if components != 1 && lg.rank_one_part().is_none() {
            return Err(Error::Disconnected { components });
        }
    }
    Ok(n)
}

/// The `k` smallest eigenpairs of `L_G x = λ L_H x` on the complement of the
/// constant vector, by preconditioned block LOBPCG.
///
/// On non-convergence the best iterate is returned inside
/// [`Error::EigenNotConverged`].
pub fn generalized_eigs(
    lg: &LaplacianOperator,
    lh: &LaplacianOperator,
    k: usize,
    precond: &dyn Preconditioner,
    options: EigenOptions,
) -> Result<EigenSolution> {
    let n = check_problem(lg, lh, k)?;
    if precond.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: precond.dim(),
        });
    }
    let m = block_size(k).min(n - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut x = DMatrix::from_fn(n, m, |_, _| rng.random_range(-0.5..0.5));
    project_columns(&mut x);

    let gx = apply_block(lg, &x);
    let hx = apply_block(lh, &x);
    let ritz = rayleigh_ritz(&x, &gx, &hx, m);
    if ritz.coeffs.ncols() < k {
        return Err(Error::IllPosed(
            "random initial block is rank deficient".into(),
        ));
    }
    let mut x = &x * &ritz.coeffs;
    let mut m = x.ncols();

    let mut p = DMatrix::<f64>::zeros(n, 0);
    let mut gp = DMatrix::<f64>::zeros(n, 0);
    let mut hp = DMatrix::<f64>::zeros(n, 0);
    let mut iterations = 0;
    let mut converged = false;
    let mut rel = vec![f64::INFINITY; m];

    loop {
        project_columns(&mut x);
        let gx = apply_block(lg, &x);
        let hx = apply_block(lh, &x);
        let mut mu = vec![0.0; m];
        for j in 0..m {
            let (xj, gxj, hxj) = (col(&x, j), col(&gx, j), col(&hx, j));
            let xgx = dot(xj, gxj);
            let xhx = dot(xj, hxj);
            mu[j] = if xgx > 0.0 { xhx / xgx } else { 0.0 };
            rel[j] = relative_residual(gxj, hxj, mu[j]);
        }
        if rel[..k].iter().all(|&r| r <= options.tol) {
            converged = true;
            break;
        }
        if iterations >= options.max_iter {
            break;
        }
        iterations += 1;

        let active: Vec<usize> = (0..m).filter(|&j| rel[j] > options.tol).collect();
        let mut r = DMatrix::<f64>::zeros(n, active.len());
        for (a, &j) in active.iter().enumerate() {
            let (gxj, hxj) = (col(&gx, j), col(&hx, j));
            for (out, (h, g)) in col_mut(&mut r, a).iter_mut().zip(hxj.iter().zip(gxj)) {
                *out = h - mu[j] * g;
            }
        }
        let mut w = precondition_block(precond, &r);
        project_columns(&mut w);
        // G-orthogonalize against the current block; X is G-orthonormal
        // up to rounding after the previous Rayleigh–Ritz step.
        let overlap = gx.transpose() * &w;
        w -= &x * overlap;
        let gw = apply_block(lg, &w);
        let hw = apply_block(lh, &w);

        let s = hstack(&[&x, &w, &p]);
        let gs = hstack(&[&gx, &gw, &gp]);
        let hs = hstack(&[&hx, &hw, &hp]);
        let ritz = rayleigh_ritz(&s, &gs, &hs, m);
        let c = ritz.coeffs;
        if c.ncols() < k {
            return Err(Error::IllPosed(format!(
                "search space collapsed to rank {} < k = {k}",
                c.ncols()
            )));
        }
        m = c.ncols();
        rel.resize(m, f64::INFINITY);

        let tail = c.rows(x.ncols(), c.nrows() - x.ncols()).into_owned();
        let wp = hstack(&[&w, &p]);
        let gwp = hstack(&[&gw, &gp]);
        let hwp = hstack(&[&hw, &hp]);
        let keep: Vec<usize> = active.iter().copied().filter(|&j| j < m).collect();
        let tail = tail.select_columns(&keep);
        p = &wp * &tail;
        gp = &gwp * &tail;
        hp = &hwp * &tail;
        x = &s * &c;
    }

    let solution = finish(lg, lh, x, k, iterations, converged)?;
    if solution.converged {
        Ok(solution)
    } else {
        Err(Error::EigenNotConverged(Box::new(solution)))
    }
}

/// Dense reference path for small problems: `L_G` and `L_H` are assembled,
/// restricted to the complement of the constants and reduced with a Cholesky
/// factor of the restricted `L_G`.
pub fn dense_generalized_eigs(
    lg: &LaplacianOperator,
    lh: &LaplacianOperator,
    k: usize,
) -> Result<EigenSolution> {
    let n = check_problem(lg, lh, k)?;
    let q = constant_complement_basis(n);
    let a = q.transpose() * lg.to_dense() * &q;
    let b = q.transpose() * lh.to_dense() * &q;
    let chol = nalgebra::Cholesky::new(symmetrize(a)).ok_or(Error::Disconnected {
        components: lg.sparse_part().map_or(0, |g| g.components().1),
    })?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::IllPosed("singular Cholesky factor".into()))?;
    let reduced = symmetrize(&l_inv * b * l_inv.transpose());
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let top = eig.eigenvalues[order[0]].max(0.0);
    if eig.eigenvalues[order[k - 1]] <= RANK_TOL * top {
        return Err(Error::IllPosed(format!(
            "L_H has fewer than k = {k} directions outside its null space"
        )));
    }
    let z = eig.eigenvectors.select_columns(&order[..k]);
    let x = &q * l_inv.transpose() * z;
    finish(lg, lh, x, k, 0, true)
}

/// Orders by ascending `λ`, normalizes to `xᵀL_H x = 1`, fixes signs and
/// records residuals.
fn finish(
    lg: &LaplacianOperator,
    lh: &LaplacianOperator,
    mut x: DMatrix<f64>,
    k: usize,
    iterations: usize,
    converged: bool,
) -> Result<EigenSolution> {
    let n = x.nrows();
    project_columns(&mut x);
    let mut pairs = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let xj = col(&x, j);
        let num = lg.quadratic(xj)?;
        let den = lh.quadratic(xj)?;
        let scale = den.max(0.0).sqrt();
        let tiny = 1e-14 * norm(xj) * norm(&lh.apply(xj)?).max(f64::MIN_POSITIVE);
        if den <= tiny {
            continue;
        }
        let mut v: Vec<f64> = xj.iter().map(|a| a / scale).collect();
        fix_sign(&mut v);
        pairs.push((num / den, v));
    }
    if pairs.len() < k {
        return Err(Error::IllPosed(format!(
            "only {} of k = {k} eigenvectors lie outside the null space of L_H",
            pairs.len()
        )));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(k);

    let mut vectors = DMatrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    let mut residual_norms = Vec::with_capacity(k);
    for (j, (lambda, v)) in pairs.into_iter().enumerate() {
        let gv = lg.apply(&v)?;
        let hv = lh.apply(&v)?;
        residual_norms.push(relative_residual(&gv, &hv, 1.0 / lambda));
        col_mut(&mut vectors, j).copy_from_slice(&v);
        values.push(lambda.max(0.0));
    }
    Ok(EigenSolution {
        values,
        vectors,
        residual_norms,
        iterations,
        converged,
    })
}

/// `‖G x − λ H x‖ / (‖G x‖ + λ ‖H x‖)` with `λ = 1/μ`.
fn relative_residual(gx: &[f64], hx: &[f64], mu: f64) -> f64 {
    if mu <= 0.0 {
        return f64::INFINITY;
    }
    let lambda = 1.0 / mu;
    let mut res = 0.0;
    for (g, h) in gx.iter().zip(hx) {
        let r = g - lambda * h;
        res += r * r;
    }
    let denom = norm(gx) + lambda * norm(hx);
    if denom == 0.0 {
        0.0
    } else {
        res.sqrt() / denom
    }
}

struct Ritz {
    coeffs: DMatrix<f64>,
}

/// Rayleigh–Ritz for the largest `μ` of `(SᵀHS, SᵀGS)`.
///
/// Columns are equilibrated in the G-norm, and Gram eigen-directions below
/// `RANK_TOL` are discarded, so nearly dependent search directions do not
/// destroy the projected problem. Returned coefficients are G-orthonormal.
fn rayleigh_ritz(s: &DMatrix<f64>, gs: &DMatrix<f64>, hs: &DMatrix<f64>, want: usize) -> Ritz {
    let width = s.ncols();
    let gram_g = symmetrize(s.transpose() * gs);
    let gram_h = symmetrize(s.transpose() * hs);
    let scale = DVector::from_iterator(
        width,
        (0..width).map(|i| {
            let d = gram_g[(i, i)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        }),
    );
    let scaled_g = DMatrix::from_fn(width, width, |i, j| gram_g[(i, j)] * scale[i] * scale[j]);
    let eig = SymmetricEigen::new(scaled_g);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..width)
        .filter(|&i| eig.eigenvalues[i] > RANK_TOL * top)
        .collect();
    let mut z = DMatrix::zeros(width, kept.len());
    for (c, &i) in kept.iter().enumerate() {
        let inv_sqrt = 1.0 / eig.eigenvalues[i].sqrt();
        for r in 0..width {
            z[(r, c)] = scale[r] * eig.eigenvectors[(r, i)] * inv_sqrt;
        }
    }
    let reduced = symmetrize(z.transpose() * &gram_h * &z);
    let inner = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..kept.len()).collect();
    order.sort_by(|&i, &j| inner.eigenvalues[j].total_cmp(&inner.eigenvalues[i]));
    order.truncate(want);
    Ritz {
        coeffs: z * inner.eigenvectors.select_columns(&order),
    }
}

/// Orthonormal basis of the complement of `1/√n`, from the Householder
/// reflector that maps `e_1` to `1/√n`.
fn constant_complement_basis(n: usize) -> DMatrix<f64> {
    let u = 1.0 / (n as f64).sqrt();
    let mut v = DVector::from_element(n, -u);
    v[0] += 1.0;
    let vv = v.dot(&v);
    let h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    h.columns(1, n - 1).into_owned()
}

/// Makes the first entry of (near-)maximal magnitude positive. The band
/// keeps symmetric vectors from flipping on rounding noise.
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let Some(best) = v.iter().position(|a| a.abs() >= max * (1.0 - 1e-8)) else {
        return;
    };
    if v[best] < 0.0 {
        v.iter_mut().for_each(|a| *a = -*a);
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    crate::operators::dot(a, b)
}

fn col(m: &DMatrix<f64>, j: usize) -> &[f64] {
    let n = m.nrows();
    &m.as_slice()[j * n..(j + 1) * n]
}

fn col_mut(m: &mut DMatrix<f64>, j: usize) -> &mut [f64] {
    let n = m.nrows();
    &mut m.as_mut_slice()[j * n..(j + 1) * n]
}

fn project_columns(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return;
    }
    m.as_mut_slice()
        .chunks_mut(n)
        .for_each(crate::operators::project_out_constant);
}

fn apply_block(op: &LaplacianOperator, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(n, x.ncols());
    if n == 0 {
        return out;
    }
    out.as_mut_slice()
        .par_chunks_mut(n)
        .zip(x.as_slice().par_chunks(n))
        .for_each(|(o, xi)| op.apply_into(xi, o));
    out
}

fn precondition_block(p: &dyn Preconditioner, r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.nrows();
    let mut out = DMatrix::zeros(n, r.ncols());
    if n == 0 {
        return out;
    }
    out.as_mut_slice()
        .par_chunks_mut(n)
        .zip(r.as_slice().par_chunks(n))
        .for_each(|(o, ri)| p.apply_into(ri, o));
    out
}

fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n = blocks[0].nrows();
    let width: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut data = Vec::with_capacity(n * width);
    for b in blocks {
        data.extend_from_slice(b.as_slice());
    }
    DMatrix::from_vec(n, width, data)
}

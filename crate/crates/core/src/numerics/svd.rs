//! One-sided Jacobi SVD and the rank-r reduction used by the solvers.

use serde::{Deserialize, Serialize};

use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_RANK_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(sigma) Vᵀ` with `k = min(rows, cols)` columns.
///
/// Singular values are sorted descending. Columns of `u` belonging to exactly
/// zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

/// Hestenes one-sided Jacobi. Orthogonalizes the columns of `a` (or of `aᵀ`
/// when that has fewer columns) by plane rotations accumulated into `V`.
pub fn svd(a: &DenseMatrix) -> Svd {
    if a.cols() > a.rows() {
        let t = svd(&a.transpose());
        let mut out = Svd { u: t.v, sigma: t.sigma, v: t.u };
        fix_signs(&mut out);
        return out;
    }
    let (m, n) = a.shape();
    // Column-major working copies.
    let mut g: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let fro2: f64 = g.iter().map(|c| dot(c, c)).sum();
    let floor = (f64::EPSILON * f64::EPSILON) * fro2;
    let eps = f64::EPSILON;

    let mut norms: Vec<f64> = g.iter().map(|c| dot(c, c)).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                let scale = (alpha * beta).sqrt();
                if scale <= floor {
                    continue;
                }
                let gamma = dot(&g[p], &g[q]);
                if gamma.abs() <= eps * scale {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (gp, gq) = pair_mut(&mut g, p, q);
                rotate(gp, gq, c, s);
                let (vp, vq) = pair_mut(&mut v, p, q);
                rotate(vp, vq, c, s);
                norms[p] = dot(&g[p], &g[p]);
                norms[q] = dot(&g[q], &g[q]);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    order.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]).then(i.cmp(&j)));

    let mut u = DenseMatrix::zeros(m, n);
    let mut vm = DenseMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (out_j, &j) in order.iter().enumerate() {
        let s = sig[j];
        sigma.push(s);
        if s > 0.0 {
            let col: Vec<f64> = g[j].iter().map(|x| x / s).collect();
            u.set_col(out_j, &col);
        }
        vm.set_col(out_j, &v[j]);
    }
    let mut out = Svd { u, sigma, v: vm };
    fix_signs(&mut out);
    out
}

fn pair_mut<T>(xs: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (lo, hi) = xs.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

#[inline]
fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

/// Largest-magnitude entry of every U column made positive; V follows.
fn fix_signs(svd: &mut Svd) {
    for j in 0..svd.sigma.len() {
        let col = svd.u.col(j);
        let lead = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1.abs() { (i, *x) } else { best });
        if lead.1 < 0.0 {
            for i in 0..svd.u.rows() {
                svd.u[(i, j)] = -svd.u[(i, j)];
            }
            for i in 0..svd.v.rows() {
                svd.v[(i, j)] = -svd.v[(i, j)];
            }
        }
    }
}

/// Numerical rank: count of singular values above `rel_tol * sigma[0]`.
pub fn numerical_rank(a: &DenseMatrix, rel_tol: f64) -> usize {
    let s = svd(a).sigma;
    match s.first() {
        Some(&s0) if s0 > 0.0 => s.iter().filter(|&&x| x > rel_tol * s0).count(),
        _ => 0,
    }
}

/// Rank-r SVD reduction of the data matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedModel {
    /// M×r, orthonormal columns.
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    /// N×r, orthonormal columns.
    pub v: DenseMatrix,
    /// r×N reduced data, equal to `vᵀ`.
    pub xtilde: DenseMatrix,
    /// Row sums of `xtilde`.
    pub s: Vec<f64>,
    /// `sigma[r] / sigma[0]`, zero when no trailing value exists.
    pub tail_ratio: f64,
    /// `‖X − U Σ Vᵀ‖_F`.
    pub residual: f64,
}

impl ReducedModel {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U diag(sigma)`, the M×r factor that maps reduced coordinates back.
    pub fn u_sigma(&self) -> DenseMatrix {
        self.u.scale_cols(&self.sigma)
    }
}

/// Truncated SVD to rank `r`, erroring when `x` is not numerically rank `r`.
pub fn svd_reduce(x: &DenseMatrix, r: usize, rank_tol: f64) -> Result<ReducedModel> {
    let model = svd_truncate(x, r)?;
    if model.tail_ratio > rank_tol {
        return Err(Error::ResidualAboveTolerance { rank: r, ratio: model.tail_ratio, tol: rank_tol });
    }
    Ok(model)
}

/// Truncated SVD to rank `r` without the trailing singular value check.
pub fn svd_truncate(x: &DenseMatrix, r: usize) -> Result<ReducedModel> {
    let (m, n) = x.shape();
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={}", m.min(n))));
    }
    let full = svd(x);
    let s0 = full.sigma[0];
    if s0 == 0.0 || full.sigma[r - 1] <= f64::EPSILON * s0 {
        let found = full.sigma.iter().filter(|&&s| s > f64::EPSILON * s0).count();
        return Err(Error::RankDeficient { expected: r, found });
    }
    let idx: Vec<usize> = (0..r).collect();
    let u = full.u.select_cols(&idx);
    let v = full.v.select_cols(&idx);
    let sigma = full.sigma[..r].to_vec();
    let tail_ratio = full.sigma.get(r).map_or(0.0, |s| s / s0);
    let approx = u.scale_cols(&sigma).matmul_t(&v);
    let residual = x.sub(&approx).frobenius_norm();
    let xtilde = v.transpose();
    let s = xtilde.row_sums();
    Ok(ReducedModel { u, sigma, v, xtilde, s, tail_ratio, residual })
}

//! Comparison methods: least-squares NMF by HALS, VolMin through a
//! minimum-volume enclosing simplex (MVES-style alternating LPs), and the
//! determinant-regularized fit `‖X − WHᵀ‖² + λ det(WᵀW)`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linprog::{solve_lp, solve_lp_tall, LinearProgram, LpStatus, DEFAULT_FEAS_TOL};
use crate::numerics::{cofactor_vector, dot, gram_det, inverse, svd, DenseMatrix, Lu};
use crate::rng::{rng_from, Rng};
use crate::solver::{successive_projection, Flag, Residuals, SolverResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOptions {
    pub max_iters: usize,
    /// Stop once an iteration changes the objective by less than this, relatively.
    pub rel_tol: f64,
    pub seed: u64,
    /// Weight of `det(WᵀW)` in the regularized fit.
    pub lambda: f64,
    pub feas_tol: f64,
    /// Column sum that output `H` is rescaled to.
    pub rho: f64,
    /// Plain NMF only: clip negative data to zero instead of failing.
    pub clip_negative_input: bool,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self { max_iters: 2000, rel_tol: 1e-10, seed: 0, lambda: 0.0, feas_tol: DEFAULT_FEAS_TOL, rho: 1.0, clip_negative_input: false }
    }
}

impl BaselineOptions {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.feas_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        Ok(())
    }
}

fn check_rank(x: &DenseMatrix, r: usize) -> Result<()> {
    let (m, n) = x.shape();
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={}", m.min(n))));
    }
    Ok(())
}

fn push_flag(flags: &mut Vec<Flag>, f: Flag) {
    if !flags.contains(&f) {
        flags.push(f);
    }
}

/// Rescales columns of `h` to sum `rho`, compensating in `w`. Columns with a
/// nonpositive sum are left alone.
fn normalize_columns(w: &mut DenseMatrix, h: &mut DenseMatrix, rho: f64) {
    let sums = h.col_sums();
    let fh: Vec<f64> = sums.iter().map(|s| if *s > 0.0 { rho / s } else { 1.0 }).collect();
    let fw: Vec<f64> = fh.iter().map(|f| 1.0 / f).collect();
    *h = h.scale_cols(&fh);
    *w = w.scale_cols(&fw);
}

fn fit_sq(x: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> f64 {
    let e = x.sub(&w.matmul_t(h)).frobenius_norm();
    e * e
}

#[allow(clippy::too_many_arguments)]
fn finish(
    x: &DenseMatrix,
    mut w: DenseMatrix,
    mut h: DenseMatrix,
    trace: Vec<f64>,
    iters: usize,
    converged: bool,
    mut flags: Vec<Flag>,
    rho: f64,
    normalize: bool,
) -> SolverResult {
    if normalize {
        normalize_columns(&mut w, &mut h, rho);
    }
    if !converged {
        push_flag(&mut flags, Flag::NotConverged);
    }
    let residuals = Residuals::compute(x, &w, &h, h.min_entry(), rho);
    SolverResult { w, h, q: None, objective_trace: trace, sweeps: iters, converged, residuals, flags }
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    if prev == 0.0 {
        0.0
    } else {
        (prev - cur).abs() / prev
    }
}

/// Least-squares NMF `min ‖X − WHᵀ‖²`, `W, H ≥ 0`, by hierarchical
/// alternating least squares. Output columns of `H` are rescaled to sum `rho`.
pub fn solve_plain_nmf(x: &DenseMatrix, r: usize, options: &BaselineOptions) -> Result<SolverResult> {
    options.validate()?;
    check_rank(x, r)?;
    let mut flags = Vec::new();
    let x = if x.min_entry() < 0.0 {
        if !options.clip_negative_input {
            return Err(Error::NegativeData);
        }
        push_flag(&mut flags, Flag::ClippedInput);
        x.map(|v| v.max(0.0))
    } else {
        x.clone()
    };
    let (m, n) = x.shape();
    let mut rng = rng_from(&[options.seed.into(), "hals-init".into()]);
    let mut w = DenseMatrix::from_fn(m, r, |_, _| rng.random::<f64>());
    let mut h = DenseMatrix::from_fn(n, r, |_, _| rng.random::<f64>());
    // Match the scale of the data before the first sweep.
    let approx = w.matmul_t(&h);
    let inner: f64 = approx.as_slice().iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
    let an = approx.frobenius_norm();
    if inner > 0.0 && an > 0.0 {
        let s = (inner / (an * an)).sqrt();
        w = w.scale(s);
        h = h.scale(s);
    }

    let mut trace = Vec::new();
    let mut converged = false;
    let mut prev = fit_sq(&x, &w, &h);
    let mut iters = 0;
    let xt = x.transpose();
    // Below this the fit is exact up to rounding and only drifts.
    let floor = (1e-13 * x.frobenius_norm()).powi(2);
    while iters < options.max_iters {
        iters += 1;
        hals_block(&xt, &w, &mut h);
        hals_block(&x, &h, &mut w);
        let cur = fit_sq(&x, &w, &h);
        trace.push(cur);
        if cur <= floor || relative_change(prev, cur) < options.rel_tol {
            converged = true;
            break;
        }
        prev = cur;
    }
    Ok(finish(&x, w, h, trace, iters, converged, flags, options.rho, true))
}

/// One HALS pass over the columns of `b` in `a ≈ fixed · bᵀ`, each column
/// set to its exact nonnegative least-squares minimizer.
fn hals_block(a: &DenseMatrix, fixed: &DenseMatrix, b: &mut DenseMatrix) {
    let r = fixed.cols();
    let afix = a.matmul(fixed);
    let gram = fixed.t_matmul(fixed);
    for k in 0..r {
        let g = gram[(k, k)];
        if g <= 0.0 {
            continue;
        }
        for i in 0..b.rows() {
            let bk: f64 = (0..r).map(|j| b[(i, j)] * gram[(j, k)]).sum();
            let v = b[(i, k)] + (afix[(i, k)] - bk) / g;
            b.row_mut(i)[k] = v.max(0.0);
        }
    }
}

/// VolMin by minimum-volume enclosing simplex on ℓ₁-normalized columns.
///
/// The normalized columns are reduced to `r − 1` affine coordinates and
/// lifted to `a_n = [α_n; 1]`. With `Δ` the lifted vertex matrix, the
/// barycentric coordinates are `Δ⁻¹ a_n`. Each sweep moves one vertex at a
/// time, then trades between pairs of facets (rows of `Δ⁻¹`), each move a
/// pair of LPs. When a sweep gains little, linearized steps on all of `Δ⁻¹`
/// at once within a shrinking box get it past the coordinate-wise fixed point.
pub fn solve_volmin_mves(x: &DenseMatrix, r: usize, options: &BaselineOptions) -> Result<SolverResult> {
    options.validate()?;
    check_rank(x, r)?;
    let (m, n) = x.shape();
    let l1: Vec<f64> = (0..n).map(|j| (0..m).map(|i| x[(i, j)].abs()).sum()).collect();
    let top = l1.iter().cloned().fold(0.0, f64::max);
    // Negligible columns carry no direction; they get a zero row in H.
    let live: Vec<usize> = (0..n).filter(|&j| l1[j] > 1e-12 * top).collect();
    if live.len() < r {
        let first = (0..n).find(|j| !live.contains(j)).unwrap_or(0);
        return Err(Error::ZeroColumn(first));
    }
    let xbar = x.select_cols(&live).scale_cols(&live.iter().map(|&j| 1.0 / l1[j]).collect::<Vec<_>>());
    let n_live = live.len();
    let d: Vec<f64> = xbar.row_sums().iter().map(|v| v / n_live as f64).collect();
    let mut flags = Vec::new();

    if r == 1 {
        let w = DenseMatrix::from_vec(m, 1, d).expect("m entries");
        let h = DenseMatrix::from_fn(n, 1, |j, _| if l1[j] > 1e-12 * top { l1[j] } else { 0.0 });
        return Ok(finish(x, w, h, vec![0.0], 0, true, flags, options.rho, true));
    }

    let centered = DenseMatrix::from_fn(m, n_live, |i, j| xbar[(i, j)] - d[i]);
    let b = svd(&centered).u.select_cols(&(0..r - 1).collect::<Vec<_>>());
    // Lifted points [α_n; 1] as columns.
    let alpha = b.t_matmul(&centered);
    let lifted = DenseMatrix::from_fn(r, n_live, |i, j| if i + 1 < r { alpha[(i, j)] } else { 1.0 });

    let mut delta = mves_init(&lifted)?;
    let volume = |dl: &DenseMatrix| Lu::new(dl).determinant().abs() / factorial(r - 1);
    let mut trace = vec![volume(&delta)];
    let mut converged = false;
    let mut iters = 0;
    while iters < options.max_iters {
        iters += 1;
        let mut next = delta.clone();
        for i in 0..r {
            if let Some(v) = mves_vertex_update(&next, &lifted, i, options.feas_tol)? {
                next.set_col(i, &v);
            }
        }
        let mut g = inverse(&next)?;
        for i in 0..r {
            for j in i + 1..r {
                if let Some((gi, gj)) = mves_facet_update(&g, &lifted, i, j, options.feas_tol)? {
                    g.set_row(i, &gi);
                    g.set_row(j, &gj);
                }
            }
        }
        // Joint steps once the cyclic moves slow down.
        if volume(&inverse(&g)?) > trace.last().unwrap() * (1.0 - MVES_SLOW) {
            let mut radius = 0.1 * g.max_abs();
            let mut steps = 0;
            while radius > 1e-9 * g.max_abs() && steps < MVES_JOINT_STEPS {
                match mves_joint_step(&g, &lifted, radius, options.feas_tol)? {
                    Some(better) => {
                        steps += 1;
                        let gain = relative_change(Lu::new(&g).determinant().abs(), Lu::new(&better).determinant().abs());
                        g = better;
                        if gain < options.rel_tol {
                            break;
                        }
                    }
                    None => radius *= 0.25,
                }
            }
        }
        let next = inverse(&g)?;
        let vol = volume(&next);
        let prev = *trace.last().expect("trace starts non-empty");
        if vol > prev {
            converged = true;
            break;
        }
        delta = next;
        trace.push(vol);
        if relative_change(prev, vol) < options.rel_tol {
            converged = true;
            break;
        }
    }

    let beta = inverse(&delta)?.matmul(&lifted);
    let mut w = DenseMatrix::zeros(m, r);
    for j in 0..r {
        let nu: Vec<f64> = (0..r - 1).map(|a| delta[(a, j)]).collect();
        let col: Vec<f64> = (0..m).map(|i| dot(b.row(i), &nu) + d[i]).collect();
        w.set_col(j, &col);
    }
    // The LP moves keep every point within about feas_tol of the simplex.
    let floor = -10.0 * options.feas_tol;
    let mut h = DenseMatrix::zeros(n, r);
    for (col, &j) in live.iter().enumerate() {
        let row: Vec<f64> = (0..r)
            .map(|k| {
                let v = beta[(k, col)];
                l1[j] * if v < 0.0 && v >= floor { 0.0 } else { v }
            })
            .collect();
        h.set_row(j, &row);
    }
    if live.len() < n {
        push_flag(&mut flags, Flag::ZeroColumns);
    }
    Ok(finish(x, w, h, trace, iters, converged, flags, options.rho, true))
}

/// Feasibility tolerance of the facet LPs, far below the containment slack.
const MVES_LP_TOL: f64 = 1e-10;

/// Relative volume decrease per sweep below which joint steps are tried.
const MVES_SLOW: f64 = 1e-2;

/// Accepted joint steps per stalled sweep.
const MVES_JOINT_STEPS: usize = 200;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Successive projection on the lifted points, then each facet of that
/// simplex is pushed out parallel to itself until it clears every point:
/// with `m_k = min_n β_k ≤ 0` the coordinates become
/// `(β_k − m_k) / (1 − Σ m)`.
fn mves_init(lifted: &DenseMatrix) -> Result<DenseMatrix> {
    let r = lifted.rows();
    let picked = successive_projection(lifted, r);
    let delta = lifted.select_cols(&picked);
    let lu = Lu::new(&delta);
    if lu.is_singular() {
        return Err(Error::Singular);
    }
    let g = lu.inverse()?;
    let beta = g.matmul(lifted);
    let mins: Vec<f64> = (0..r).map(|k| beta.row(k).iter().fold(0.0f64, |a, &v| a.min(v))).collect();
    let total = 1.0 - mins.iter().sum::<f64>();
    // A point always lies on the affine plane, so e_rᵀ picks up the shift.
    let shifted = DenseMatrix::from_fn(r, r, |k, a| (g[(k, a)] - if a + 1 == r { mins[k] } else { 0.0 }) / total);
    inverse(&shifted)
}

/// Best replacement for vertex `i`, or `None` to keep it.
///
/// Replacing vertex `i` by `ν` gives `γ = Δ⁻¹ [ν; 1]`: the volume ratio is
/// `γ_i` and the new coordinate `k` of a point with old coordinates `β` is
/// `(γ_i β_k − γ_k β_i) / γ_i`, all affine in `ν`.
fn mves_vertex_update(delta: &DenseMatrix, lifted: &DenseMatrix, i: usize, feas_tol: f64) -> Result<Option<Vec<f64>>> {
    let r = delta.rows();
    let n = lifted.cols();
    let inv = inverse(delta)?;
    let beta = inv.matmul(lifted);
    // γ(ν) = P ν + p0.
    let p = |k: usize| -> Vec<f64> { (0..r - 1).map(|a| inv[(k, a)]).collect() };
    let p0 = |k: usize| inv[(k, r - 1)];
    let pi = p(i);
    // Points may sit up to `feas_tol` outside a facet; see the shifted rows below.
    let tol = 10.0 * feas_tol;

    let mut best: Option<(f64, Vec<f64>)> = None;
    for tau in [1.0, -1.0] {
        if (0..n).any(|nn| tau * beta[(i, nn)] < -tol) {
            continue;
        }
        let mut rows = Vec::with_capacity((r - 1) * n + 1);
        let mut rhs = Vec::with_capacity((r - 1) * n + 1);
        for k in (0..r).filter(|&k| k != i) {
            let pk = p(k);
            for nn in 0..n {
                // New coordinate k may not drop below −feas_tol/2, or below
                // its current value where that is lower; facet moves keep
                // the band down to −feas_tol so neither kind pins a point.
                let b = beta[(k, nn)];
                let (bk, bi) = (b.max(-0.5 * feas_tol) + 0.5 * feas_tol, beta[(i, nn)]);
                // The row is homogeneous in (bk, bi); normalize it.
                let norm = bk.max(bi.abs());
                if norm == 0.0 {
                    continue;
                }
                let f = tau / norm;
                rows.push(pi.iter().zip(&pk).map(|(a, c)| f * (bk * a - bi * c)).collect::<Vec<f64>>());
                rhs.push(-f * (bk * p0(i) - bi * p0(k)));
            }
        }
        // Volume ratio τ γ_i stays bounded away from zero.
        rows.push(pi.iter().map(|a| tau * a).collect());
        rhs.push(1e-12 - tau * p0(i));
        let lp = LinearProgram::new(pi.iter().map(|a| -tau * a).collect())
            .with_ineq(DenseMatrix::from_rows(&rows)?, rhs);
        let out = solve_lp(&lp, MVES_LP_TOL)?;
        if out.status != LpStatus::Optimal {
            continue;
        }
        let ratio = tau * (dot(&pi, &out.x) + p0(i));
        if best.as_ref().is_none_or(|(v, _)| ratio < *v) {
            let mut v = out.x;
            v.push(1.0);
            best = Some((ratio, v));
        }
    }
    Ok(best.filter(|(ratio, _)| *ratio < 1.0 - 1e-13).map(|(_, v)| v))
}

/// Joint move of every facet: maximizes the linearization of `log|det G|`,
/// `tr(Δ dG)`, over `dG` with `1ᵀdG = 0`, `|dG| ≤ radius` entrywise and the
/// containment rows, then keeps the step only if `|det G|` grows.
fn mves_joint_step(g: &DenseMatrix, lifted: &DenseMatrix, radius: f64, feas_tol: f64) -> Result<Option<DenseMatrix>> {
    let r = g.rows();
    let n = lifted.cols();
    let delta = inverse(g)?;
    let beta = g.matmul(lifted);
    let nv = (r - 1) * r;
    // Variable (k, l) for k < r − 1; the last row is minus their sum.
    let objective: Vec<f64> = (0..nv).map(|v| {
        let (k, l) = (v / r, v % r);
        delta[(l, k)] - delta[(l, r - 1)]
    }).collect();
    let mut rows = Vec::with_capacity(r * n);
    let mut rhs = Vec::with_capacity(r * n);
    for nn in 0..n {
        let a = lifted.col(nn);
        for k in 0..r {
            let mut row = vec![0.0; nv];
            if k + 1 < r {
                row[k * r..(k + 1) * r].copy_from_slice(&a);
            } else {
                for kk in 0..r - 1 {
                    for l in 0..r {
                        row[kk * r + l] = -a[l];
                    }
                }
            }
            rows.push(row);
            rhs.push(beta[(k, nn)].min(-feas_tol) - beta[(k, nn)]);
        }
    }
    let lp = LinearProgram::new(objective)
        .with_ineq(DenseMatrix::from_rows(&rows)?, rhs)
        .with_bounds(vec![(Some(-radius), Some(radius)); nv]);
    // A failed dual solve just ends the joint steps; the primal route on this
    // size is far too slow for a heuristic move.
    let Some(out) = solve_lp_tall(&lp, MVES_LP_TOL)? else {
        return Ok(None);
    };
    if out.status != LpStatus::Optimal || lp.max_violation(&out.x) > feas_tol {
        return Ok(None);
    }
    let mut next = g.clone();
    for k in 0..r {
        for l in 0..r {
            let d = if k + 1 < r { out.x[k * r + l] } else { -(0..r - 1).map(|kk| out.x[kk * r + l]).sum::<f64>() };
            next.row_mut(k)[l] += d;
        }
    }
    let (old, new) = (Lu::new(g).determinant().abs(), Lu::new(&next).determinant().abs());
    Ok((new > old * (1.0 + 1e-13)).then_some(next))
}

/// Best replacement for rows `i` and `j` of `G = Δ⁻¹` with their sum held
/// fixed, or `None` to keep them.
///
/// The barycentric coordinates of point `a_n` are `G a_n` and `1ᵀG = e_rᵀ`
/// must hold, which the fixed sum preserves. Adding row `i` to row `j` does
/// not change `det G`, so the determinant is affine in row `i`.
fn mves_facet_update(g: &DenseMatrix, lifted: &DenseMatrix, i: usize, j: usize, feas_tol: f64) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let n = lifted.cols();
    let beta = g.matmul(lifted);
    let sum: Vec<f64> = g.row(i).iter().zip(g.row(j)).map(|(a, b)| a + b).collect();
    let mut fixed = g.clone();
    fixed.set_row(j, &sum);
    let cof = cofactor_vector(&fixed, i);
    let current = dot(&cof, g.row(i));

    // β_i, β_j ≥ −feas_tol, loosened to the current values where those are
    // lower so the present rows are always feasible.
    let mut rows = Vec::with_capacity(2 * n);
    let mut rhs = Vec::with_capacity(2 * n);
    for nn in 0..n {
        let a = lifted.col(nn);
        let (bi, bj) = (beta[(i, nn)], beta[(j, nn)]);
        rows.push(a.iter().map(|v| -v).collect());
        rhs.push(bj.min(-feas_tol) - bi - bj);
        rows.push(a);
        rhs.push(bi.min(-feas_tol));
    }
    let ineq = DenseMatrix::from_rows(&rows)?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for sign in [1.0, -1.0] {
        let lp = LinearProgram::new(cof.iter().map(|c| sign * c).collect()).with_ineq(ineq.clone(), rhs.clone());
        let out = solve_lp(&lp, MVES_LP_TOL)?;
        if out.status != LpStatus::Optimal {
            continue;
        }
        let det = dot(&cof, &out.x).abs();
        if best.as_ref().is_none_or(|(v, _)| det > *v) {
            best = Some((det, out.x));
        }
    }
    Ok(best.filter(|(det, _)| *det > current.abs() * (1.0 + 1e-13)).map(|(_, z)| {
        let rest = sum.iter().zip(&z).map(|(s, v)| s - v).collect();
        (z, rest)
    }))
}

/// Sort-based Euclidean projection onto `{h ≥ 0, 1·h = rho}`.
pub fn project_simplex(v: &[f64], rho: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        css += uj;
        let t = (css - rho) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn regularized_objective(x: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix, lambda: f64) -> f64 {
    let fit = fit_sq(x, w, h);
    if lambda == 0.0 {
        fit
    } else {
        fit + lambda * gram_det(w)
    }
}

/// `min ‖X − WHᵀ‖² + λ det(WᵀW)` with every column of `H` on the
/// `rho`-simplex, from a seeded random start.
pub fn solve_regularized(x: &DenseMatrix, r: usize, options: &BaselineOptions) -> Result<SolverResult> {
    options.validate()?;
    check_rank(x, r)?;
    let (m, n) = x.shape();
    let mut rng: Rng = rng_from(&[options.seed.into(), "regularized-init".into()]);
    let mut h = DenseMatrix::from_fn(n, r, |_, _| rng.random::<f64>());
    let sums = h.col_sums();
    h = h.scale_cols(&sums.iter().map(|s| options.rho / s).collect::<Vec<_>>());
    let w = least_squares_w(x, &h).unwrap_or_else(|| DenseMatrix::from_fn(m, r, |_, _| rng.random::<f64>()));
    solve_regularized_from(x, w, h, options)
}

/// `W = X H (HᵀH)⁻¹`, or `None` when `HᵀH` is singular.
fn least_squares_w(x: &DenseMatrix, h: &DenseMatrix) -> Option<DenseMatrix> {
    let lu = Lu::new(&h.t_matmul(h));
    if lu.is_singular() {
        return None;
    }
    Some(x.matmul(h).matmul(&lu.inverse().ok()?))
}

/// The regularized fit from a given start. `h0` is projected onto the
/// feasible set first.
pub fn solve_regularized_from(x: &DenseMatrix, w0: DenseMatrix, h0: DenseMatrix, options: &BaselineOptions) -> Result<SolverResult> {
    options.validate()?;
    let (m, n) = x.shape();
    let r = w0.cols();
    if w0.shape() != (m, r) || h0.shape() != (n, r) {
        return Err(Error::ShapeMismatch(format!("W0 {:?} and H0 {:?} against X {:?}", w0.shape(), h0.shape(), x.shape())));
    }
    let lambda = options.lambda;
    let mut w = w0;
    let mut h = project_columns(&h0, options.rho);
    let mut flags = Vec::new();
    let mut trace = Vec::new();
    let mut obj = regularized_objective(x, &w, &h, lambda);
    let mut converged = false;
    let mut iters = 0;
    let mut w_step = 0.0;

    while iters < options.max_iters {
        iters += 1;
        let start = obj;

        // W-step.
        if lambda == 0.0 {
            if let Some(cand) = least_squares_w(x, &h) {
                let f = regularized_objective(x, &cand, &h, lambda);
                if f < obj {
                    w = cand;
                    obj = f;
                }
            }
        } else {
            let resid = x.sub(&w.matmul_t(&h));
            let mut grad = resid.matmul(&h).scale(-2.0);
            let gram = w.t_matmul(&w);
            let det = gram_det(&w);
            if det < 1e-300 {
                push_flag(&mut flags, Flag::GramSingular);
            } else if let Ok(ginv) = inverse(&gram) {
                let reg = w.matmul(&ginv).scale(2.0 * lambda * det);
                grad = DenseMatrix::from_fn(m, r, |i, j| grad[(i, j)] + reg[(i, j)]);
            }
            let gn2 = grad.frobenius_norm().powi(2);
            if gn2 > 0.0 {
                if w_step == 0.0 {
                    w_step = 0.5 / h.t_matmul(&h).frobenius_norm().max(f64::MIN_POSITIVE);
                }
                // The determinant term can be steep far beyond the fit
                // curvature; never try a step longer than ‖W‖.
                let mut t = (w_step * 2.0).min(w.frobenius_norm() / gn2.sqrt());
                for _ in 0..60 {
                    let cand = w.sub(&grad.scale(t));
                    let f = regularized_objective(x, &cand, &h, lambda);
                    if f.is_finite() && f <= obj - 1e-4 * t * gn2 {
                        w = cand;
                        obj = f;
                        w_step = t;
                        break;
                    }
                    t *= 0.5;
                }
            }
        }

        // H-step: projected gradient on the fit term.
        let gram = w.t_matmul(&w);
        let gn = gram.frobenius_norm();
        if gn > 0.0 {
            let xtw = x.t_matmul(&w);
            let hg = h.matmul(&gram);
            let step = 1.0 / (2.0 * gn);
            let moved = DenseMatrix::from_fn(n, r, |i, j| h[(i, j)] + 2.0 * step * (xtw[(i, j)] - hg[(i, j)]));
            let cand = project_columns(&moved, options.rho);
            let f = regularized_objective(x, &w, &cand, lambda);
            if f < obj {
                h = cand;
                obj = f;
            }
        }

        trace.push(obj);
        if obj == 0.0 || relative_change(start, obj) < options.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(finish(x, w, h, trace, iters, converged, flags, options.rho, false))
}

fn project_columns(h: &DenseMatrix, rho: f64) -> DenseMatrix {
    let mut out = h.clone();
    for j in 0..h.cols() {
        out.set_col(j, &project_simplex(&h.col(j), rho));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_example() {
        let p = project_simplex(&[0.5, 0.8, -0.1], 1.0);
        let want = [0.35, 0.65, 0.0];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn simplex_projection_keeps_feasible_points() {
        assert_eq!(project_simplex(&[0.25, 0.75], 1.0), vec![0.25, 0.75]);
        let p = project_simplex(&[3.0, 3.0], 2.0);
        assert_eq!(p, vec![1.0, 1.0]);
    }

    #[test]
    fn plain_rejects_negative_data() {
        let x = DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(solve_plain_nmf(&x, 1, &BaselineOptions::default()), Err(Error::NegativeData));
        let opts = BaselineOptions { clip_negative_input: true, ..Default::default() };
        assert!(solve_plain_nmf(&x, 1, &opts).unwrap().flags.contains(&Flag::ClippedInput));
    }

    #[test]
    fn volmin_needs_r_nonzero_columns() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]).unwrap();
        assert_eq!(solve_volmin_mves(&x, 2, &BaselineOptions::default()), Err(Error::ZeroColumn(1)));
        let res = solve_volmin_mves(&x, 1, &BaselineOptions::default()).unwrap();
        assert_eq!(res.h.col(0)[1..], [0.0, 0.0]);
    }
}


//! The determinant criterion: minimize `det(WᵀW)` subject to `X = WHᵀ`,
//! `Hᵀ1 = rho·1`, `H ≥ 0`.
//!
//! After the rank-r reduction `X ≈ U Σ X̃` every feasible pair is
//! `Hᵀ = Q X̃`, `W = U Σ Q⁻¹` for an invertible r×r `Q`, and
//! `det(WᵀW) = det(Σ)² / det(Q)²`. So the solver maximizes `|det Q|` over
//! `{Q : Q X̃ ≥ 0, Q s = rho·1}` with `s = X̃·1`. The constraints split by
//! rows of `Q`, and with every other row fixed `det Q = p·q_k` where `p` is
//! the cofactor vector of row `k`. Each row update is therefore two LPs
//! (maximize `p·q` and `-p·q`), and rows are swept cyclically.

use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linprog::{solve_lp, LinearProgram, LpStatus, DEFAULT_FEAS_TOL};
use crate::numerics::{cofactor_vector, dot, svd_reduce, DenseMatrix, Lu, ReducedModel, DEFAULT_RANK_TOL};
use crate::rng::rng_from;

/// Half-width of the safeguard box on every entry of `Q`, in units of `rho`.
pub const BOX_SCALE: f64 = 1e6;

const INIT_ATTEMPTS: usize = 50;
/// A row is replaced only when `|p·q|` grows by more than this relative amount.
const IMPROVE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    #[default]
    SpaInit,
    RandomFeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_sweeps: usize,
    /// Stop once a sweep raises `log|det Q|` by less than this.
    pub rel_tol: f64,
    pub feas_tol: f64,
    /// Target column sum of `H`.
    pub rho: f64,
    pub init: InitStrategy,
    pub seed: u64,
    /// Clip entries of `H` in `[-feas_tol·rho, 0)` to zero on output.
    pub clip_negatives: bool,
    /// Largest accepted `sigma[r] / sigma[0]`.
    pub rank_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            rel_tol: 1e-10,
            feas_tol: DEFAULT_FEAS_TOL,
            rho: 1.0,
            init: InitStrategy::SpaInit,
            seed: 0,
            clip_negatives: true,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.rel_tol > 0.0 && self.feas_tol > 0.0 && self.rank_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Conditions worth reporting alongside a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    NotConverged,
    /// A safeguard box bound was active at an accepted row optimum.
    BoxActive,
    /// A row had a vanishing cofactor vector and was re-initialized.
    DegenerateCofactor,
    /// Negative input entries were clipped to zero before fitting.
    ClippedInput,
    /// `det(WᵀW)` underflowed and the determinant gradient was skipped.
    GramSingular,
    /// Columns of X with negligible ℓ₁ norm were left out of the fit.
    ZeroColumns,
    /// The solve failed; the result holds no usable factors.
    Failed,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::NotConverged => "not_converged",
            Flag::BoxActive => "box_active",
            Flag::DegenerateCofactor => "degenerate_cofactor",
            Flag::ClippedInput => "clipped_input",
            Flag::GramSingular => "gram_singular",
            Flag::ZeroColumns => "zero_columns",
            Flag::Failed => "failed",
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖X − WHᵀ‖_F / ‖X‖_F`.
    pub reconstruction: f64,
    /// Smallest entry of `H` before any clipping.
    pub min_h: f64,
    /// `max_k |1·H[:,k] − rho|`.
    pub colsum: f64,
}

impl Residuals {
    pub fn compute(x: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix, min_h: f64, rho: f64) -> Self {
        let xn = x.frobenius_norm();
        let fit = x.sub(&w.matmul_t(h)).frobenius_norm();
        let reconstruction = if xn > 0.0 { fit / xn } else { fit };
        let colsum = h.col_sums().iter().map(|c| (c - rho).abs()).fold(0.0, f64::max);
        Self { reconstruction, min_h, colsum }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    /// M×r.
    pub w: DenseMatrix,
    /// N×r.
    pub h: DenseMatrix,
    /// Reduced mixing matrix, only for the determinant criterion.
    pub q: Option<DenseMatrix>,
    /// One value per completed sweep or iteration. `|det Q|` for the
    /// determinant criterion, the fitting objective for the baselines.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub residuals: Residuals,
    pub flags: Vec<Flag>,
}

/// Feasible set of one row subproblem.
struct RowProblem<'a> {
    model: &'a ReducedModel,
    ineq: DenseMatrix,
    zeros: Vec<f64>,
    eq: DenseMatrix,
    rho: f64,
    feas_tol: f64,
}

impl<'a> RowProblem<'a> {
    fn new(model: &'a ReducedModel, options: &SolverOptions) -> Self {
        let n = model.xtilde.cols();
        let r = model.rank();
        Self {
            model,
            ineq: model.xtilde.transpose(),
            zeros: vec![0.0; n],
            eq: DenseMatrix::from_vec(1, r, model.s.clone()).expect("s has length r"),
            rho: options.rho,
            feas_tol: options.feas_tol,
        }
    }

    fn bound(&self) -> f64 {
        BOX_SCALE * self.rho
    }

    /// `max c·q` over the row's feasible set.
    fn maximize(&self, c: Vec<f64>) -> Result<Vec<f64>> {
        let b = self.bound();
        let lp = LinearProgram::new(c)
            .with_ineq(self.ineq.clone(), self.zeros.clone())
            .with_eq(self.eq.clone(), vec![self.rho])
            .with_box(-b, b);
        let out = solve_lp(&lp, self.feas_tol)?;
        match out.status {
            LpStatus::Optimal => Ok(out.x),
            LpStatus::Infeasible => Err(Error::LpFailure("row subproblem infeasible: no nonnegative H with the required column sums".into())),
            LpStatus::Unbounded => Err(Error::LpFailure("boxed row subproblem reported unbounded".into())),
        }
    }

    fn feasible(&self, q: &[f64]) -> bool {
        let tol = self.feas_tol * self.rho;
        let lowest = self.ineq.matvec(q).into_iter().fold(f64::INFINITY, f64::min);
        lowest >= -tol && (dot(&self.model.s, q) - self.rho).abs() <= tol
    }

    fn on_box(&self, q: &[f64]) -> bool {
        let b = self.bound();
        q.iter().any(|v| v.abs() >= b * (1.0 - 1e-9))
    }
}

/// Initial `Q` for the alternating sweeps.
pub fn init_q(model: &ReducedModel, options: &SolverOptions) -> Result<DenseMatrix> {
    options.validate()?;
    match options.init {
        InitStrategy::SpaInit => spa_init(model, options.rho),
        InitStrategy::RandomFeasible => random_feasible_init(model, options),
    }
}

/// Successive projection: indices of `r` columns picked by largest residual
/// norm with deflation after each pick. Ties go to the lowest index.
pub fn successive_projection(cols: &DenseMatrix, r: usize) -> Vec<usize> {
    let n = cols.cols();
    let mut residual: Vec<Vec<f64>> = (0..n).map(|j| cols.col(j)).collect();
    let mut picked = Vec::with_capacity(r);
    for _ in 0..r.min(n) {
        let mut best = (usize::MAX, -1.0);
        for (j, v) in residual.iter().enumerate() {
            let norm = dot(v, v);
            if !picked.contains(&j) && norm > best.1 {
                best = (j, norm);
            }
        }
        let j = best.0;
        picked.push(j);
        let norm = best.1.sqrt();
        if norm == 0.0 {
            continue;
        }
        let u: Vec<f64> = residual[j].iter().map(|v| v / norm).collect();
        for v in residual.iter_mut() {
            let d = dot(v, &u);
            v.iter_mut().zip(&u).for_each(|(a, b)| *a -= d * b);
        }
    }
    picked
}

fn spa_init(model: &ReducedModel, rho: f64) -> Result<DenseMatrix> {
    let r = model.rank();
    let picked = successive_projection(&model.xtilde, r);
    let selected = model.xtilde.select_cols(&picked);
    let lu = Lu::new(&selected);
    if lu.is_singular() {
        return Err(Error::InitSingular { attempts: 1 });
    }
    let mut q = lu.inverse()?;
    for k in 0..r {
        let sq = dot(q.row(k), &model.s);
        if sq.abs() > f64::EPSILON * rho {
            let f = rho / sq;
            q.row_mut(k).iter_mut().for_each(|v| *v *= f);
        }
    }
    Ok(q)
}

fn random_feasible_init(model: &ReducedModel, options: &SolverOptions) -> Result<DenseMatrix> {
    let r = model.rank();
    let problem = RowProblem::new(model, options);
    for attempt in 0..INIT_ATTEMPTS {
        let mut rng = rng_from(&[options.seed.into(), "init-q".into(), attempt.into()]);
        let mut q = DenseMatrix::zeros(r, r);
        for k in 0..r {
            let c: Vec<f64> = (0..r).map(|_| StandardNormal.sample(&mut rng)).collect();
            q.set_row(k, &problem.maximize(c)?);
        }
        if !Lu::new(&q).is_singular() {
            return Ok(q);
        }
    }
    Err(Error::InitSingular { attempts: INIT_ATTEMPTS })
}

/// Outcome of one cyclic pass over the rows of `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub q: DenseMatrix,
    /// At least one row changed.
    pub improved: bool,
    pub flags: Vec<Flag>,
}

/// One cyclic pass. Row `k` is replaced by the better of the two LP optima
/// when it beats the current row, or unconditionally when the current row is
/// infeasible.
pub fn ao_sweep(q: &DenseMatrix, model: &ReducedModel, options: &SolverOptions) -> Result<Sweep> {
    options.validate()?;
    let r = model.rank();
    if q.shape() != (r, r) {
        return Err(Error::ShapeMismatch(format!("Q is {:?}, expected {r}x{r}", q.shape())));
    }
    let problem = RowProblem::new(model, options);
    let mut q = q.clone();
    let mut improved = false;
    let mut flags = Vec::new();
    for k in 0..r {
        let p = cofactor_vector(&q, k);
        let current = q.row(k).to_vec();
        if p.iter().all(|v| *v == 0.0) {
            // Re-seed the row so later rows get a usable cofactor vector.
            let mut rng = rng_from(&[options.seed.into(), "degenerate-row".into(), k.into()]);
            let c: Vec<f64> = (0..r).map(|_| StandardNormal.sample(&mut rng)).collect();
            let row = problem.maximize(c)?;
            if row != current {
                improved = true;
            }
            q.set_row(k, &row);
            push_flag(&mut flags, Flag::DegenerateCofactor);
            continue;
        }
        let plus = problem.maximize(p.clone())?;
        let minus = problem.maximize(p.iter().map(|v| -v).collect())?;
        let (vp, vm) = (dot(&p, &plus).abs(), dot(&p, &minus).abs());
        let best = if vm > vp { minus } else { plus };
        let gain = dot(&p, &best).abs();
        let now = dot(&p, &current).abs();
        if !problem.feasible(&current) || gain > now * (1.0 + IMPROVE_TOL) {
            if problem.on_box(&best) {
                push_flag(&mut flags, Flag::BoxActive);
            }
            if best != current {
                improved = true;
            }
            q.set_row(k, &best);
        }
    }
    Ok(Sweep { q, improved, flags })
}

fn push_flag(flags: &mut Vec<Flag>, f: Flag) {
    if !flags.contains(&f) {
        flags.push(f);
    }
}

/// Solves the determinant criterion for rank `r`.
pub fn solve_proposed(x: &DenseMatrix, r: usize, options: &SolverOptions) -> Result<SolverResult> {
    options.validate()?;
    let model = svd_reduce(x, r, options.rank_tol)?;
    let q0 = init_q(&model, options)?;
    solve_reduced(x, &model, q0, options)
}

/// Alternating sweeps from a given starting `Q`, then factor recovery.
pub fn solve_reduced(x: &DenseMatrix, model: &ReducedModel, q0: DenseMatrix, options: &SolverOptions) -> Result<SolverResult> {
    options.validate()?;
    let mut q = q0;
    let mut trace: Vec<f64> = Vec::new();
    let mut flags = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < options.max_sweeps {
        let step = ao_sweep(&q, model, options)?;
        sweeps += 1;
        for f in &step.flags {
            push_flag(&mut flags, *f);
        }
        let det = Lu::new(&step.q).determinant().abs();
        match trace.last().copied() {
            None => {
                q = step.q;
                trace.push(det);
                if !step.improved {
                    converged = true;
                    break;
                }
            }
            Some(prev) => {
                // Rounding in the determinant can undo a sub-ulp gain; keep the
                // old iterate so the trace never decreases.
                if det < prev || !step.improved {
                    converged = true;
                    break;
                }
                q = step.q;
                trace.push(det);
                if prev > 0.0 && (det / prev).ln() < options.rel_tol {
                    converged = true;
                    break;
                }
            }
        }
    }
    if !converged {
        push_flag(&mut flags, Flag::NotConverged);
    }
    recover(x, model, q, trace, sweeps, converged, flags, options)
}

#[allow(clippy::too_many_arguments)]
fn recover(
    x: &DenseMatrix,
    model: &ReducedModel,
    q: DenseMatrix,
    trace: Vec<f64>,
    sweeps: usize,
    converged: bool,
    flags: Vec<Flag>,
    options: &SolverOptions,
) -> Result<SolverResult> {
    let lu = Lu::new(&q);
    if lu.is_singular() {
        return Err(Error::Singular);
    }
    let w = model.u_sigma().matmul(&lu.inverse()?);
    let mut h = q.matmul(&model.xtilde).transpose();
    let min_h = h.min_entry();
    if options.clip_negatives {
        let floor = -options.feas_tol * options.rho;
        h = h.map(|v| if v < 0.0 && v >= floor { 0.0 } else { v });
    }
    let residuals = Residuals::compute(x, &w, &h, min_h, options.rho);
    Ok(SolverResult { w, h, q: Some(q), objective_trace: trace, sweeps, converged, residuals, flags })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_is_a_single_lp() {
        let x = DenseMatrix::from_fn(3, 4, |i, j| (i + 1) as f64 * (j + 1) as f64);
        let res = solve_proposed(&x, 1, &SolverOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.sweeps <= 2);
        let sum: f64 = res.h.col(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(res.residuals.reconstruction < 1e-12);
    }

    #[test]
    fn rejects_bad_rho() {
        let x = DenseMatrix::identity(2);
        let opts = SolverOptions { rho: 0.0, ..Default::default() };
        assert!(matches!(solve_proposed(&x, 2, &opts), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn spa_picks_extreme_columns() {
        let cols = DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.5, 0.2], vec![0.0, 1.0, 0.5, 0.3]]).unwrap();
        let mut picked = successive_projection(&cols, 2);
        picked.sort();
        assert_eq!(picked, vec![0, 1]);
    }
}

//! Small dense linear programs: `max c·x` subject to `A x ≥ b`, `E x = f` and
//! optional per-variable boxes.
//!
//! Problems with many more inequality rows than variables (the shape of every
//! alternating-LP subproblem here) are solved through their dual, which keeps
//! the tableau at `n` rows; the optimal dual basis names the active primal
//! constraints and the primal vertex is recovered by one square solve.
//! Anything the dual route cannot settle falls through to the primal route.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, DenseMatrix, Lu};
use simplex::{solve_standard, StandardForm, StandardOutcome};

pub const DEFAULT_FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearProgram {
    /// Maximized.
    pub objective: Vec<f64>,
    /// Rows of `A` in `A x ≥ b`.
    pub ineq: DenseMatrix,
    pub ineq_rhs: Vec<f64>,
    /// Rows of `E` in `E x = f`.
    pub eq: DenseMatrix,
    pub eq_rhs: Vec<f64>,
    /// `(lower, upper)` per variable; `None` is unbounded on that side.
    pub bounds: Vec<(Option<f64>, Option<f64>)>,
}

impl LinearProgram {
    /// Unconstrained program over free variables.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            ineq: DenseMatrix::zeros(0, n),
            ineq_rhs: Vec::new(),
            eq: DenseMatrix::zeros(0, n),
            eq_rhs: Vec::new(),
            bounds: vec![(None, None); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_ineq(mut self, a: DenseMatrix, b: Vec<f64>) -> Self {
        self.ineq = a;
        self.ineq_rhs = b;
        self
    }

    pub fn with_eq(mut self, e: DenseMatrix, f: Vec<f64>) -> Self {
        self.eq = e;
        self.eq_rhs = f;
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(Option<f64>, Option<f64>)>) -> Self {
        self.bounds = bounds;
        self
    }

    /// Same box `[lo, hi]` on every variable.
    pub fn with_box(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = vec![(Some(lo), Some(hi)); self.num_vars()];
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.ineq.cols() != n || self.eq.cols() != n || self.bounds.len() != n {
            return Err(Error::ShapeMismatch("LP column counts differ from objective length".into()));
        }
        if self.ineq.rows() != self.ineq_rhs.len() || self.eq.rows() != self.eq_rhs.len() {
            return Err(Error::ShapeMismatch("LP right-hand side length".into()));
        }
        let finite = self.objective.iter().chain(&self.ineq_rhs).chain(&self.eq_rhs).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite LP data".into()));
        }
        Ok(())
    }

    /// Inequality rows `G x ≤ h` that include finite bounds.
    fn as_le_rows(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.num_vars();
        let mut g = Vec::new();
        let mut h = Vec::new();
        for i in 0..self.ineq.rows() {
            g.push(self.ineq.row(i).iter().map(|v| -v).collect());
            h.push(-self.ineq_rhs[i]);
        }
        for (j, (lo, hi)) in self.bounds.iter().enumerate() {
            if let Some(lo) = lo {
                let mut row = vec![0.0; n];
                row[j] = -1.0;
                g.push(row);
                h.push(-lo);
            }
            if let Some(hi) = hi {
                let mut row = vec![0.0; n];
                row[j] = 1.0;
                g.push(row);
                h.push(*hi);
            }
        }
        (g, h)
    }

    /// Largest violation of any constraint at `x`, scaled per row by `1 + |rhs|`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.ineq.rows() {
            let v = self.ineq_rhs[i] - dot(self.ineq.row(i), x);
            worst = worst.max(v / (1.0 + self.ineq_rhs[i].abs()));
        }
        for i in 0..self.eq.rows() {
            let v = (dot(self.eq.row(i), x) - self.eq_rhs[i]).abs();
            worst = worst.max(v / (1.0 + self.eq_rhs[i].abs()));
        }
        for (xj, (lo, hi)) in x.iter().zip(&self.bounds) {
            if let Some(lo) = lo {
                worst = worst.max((lo - xj) / (1.0 + lo.abs()));
            }
            if let Some(hi) = hi {
                worst = worst.max((xj - hi) / (1.0 + hi.abs()));
            }
        }
        worst
    }

    /// Largest violation at `x`, each row scaled by the magnitudes that
    /// enter it, `|rhs| + Σ |a_j x_j|`, so rounding in the row reads as such.
    fn relative_violation(&self, x: &[f64]) -> f64 {
        let rel = |v: f64, mag: f64| if v > 0.0 { v / mag } else { 0.0 };
        let row_mag = |row: &[f64], rhs: f64| rhs.abs() + row.iter().zip(x).map(|(a, b)| (a * b).abs()).sum::<f64>();
        let mut worst = 0.0f64;
        for i in 0..self.ineq.rows() {
            let (row, rhs) = (self.ineq.row(i), self.ineq_rhs[i]);
            worst = worst.max(rel(rhs - dot(row, x), row_mag(row, rhs)));
        }
        for i in 0..self.eq.rows() {
            let (row, rhs) = (self.eq.row(i), self.eq_rhs[i]);
            worst = worst.max(rel((dot(row, x) - rhs).abs(), row_mag(row, rhs)));
        }
        for (xj, (lo, hi)) in x.iter().zip(&self.bounds) {
            if let Some(lo) = lo {
                worst = worst.max(rel(lo - xj, lo.abs() + xj.abs()));
            }
            if let Some(hi) = hi {
                worst = worst.max(rel(xj - hi, hi.abs() + xj.abs()));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Optimizer; empty unless `status == Optimal`.
    pub x: Vec<f64>,
    /// `+inf` when unbounded, `-inf` when infeasible.
    pub value: f64,
}

impl LpOutcome {
    fn optimal(lp: &LinearProgram, x: Vec<f64>) -> Self {
        let value = dot(&lp.objective, &x);
        Self { status: LpStatus::Optimal, x, value }
    }

    fn without_point(status: LpStatus) -> Self {
        let value = match status {
            LpStatus::Unbounded => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        };
        Self { status, x: Vec::new(), value }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves the program. Deterministic: identical inputs give identical outputs.
pub fn solve_lp(lp: &LinearProgram, feas_tol: f64) -> Result<LpOutcome> {
    lp.validate()?;
    if feas_tol <= 0.0 {
        return Err(Error::InvalidArgument("feas_tol must be positive".into()));
    }
    let n = lp.num_vars();
    let n_bounds: usize = lp.bounds.iter().map(|(l, h)| l.is_some() as usize + h.is_some() as usize).sum();
    let n_ineq = lp.ineq.rows() + n_bounds;
    if n > 0 && n_ineq > 2 * (n + lp.eq.rows()) {
        if let Some(out) = solve_via_dual(lp, feas_tol)? {
            return Ok(out);
        }
    }
    solve_primal(lp, feas_tol)
}

/// Solves a program with many more inequalities than variables through its
/// dual only. `None` means the dual did not settle it; no primal fallback is
/// tried.
pub(crate) fn solve_lp_tall(lp: &LinearProgram, feas_tol: f64) -> Result<Option<LpOutcome>> {
    lp.validate()?;
    if feas_tol <= 0.0 {
        return Err(Error::InvalidArgument("feas_tol must be positive".into()));
    }
    if lp.num_vars() == 0 {
        return Ok(None);
    }
    solve_via_dual(lp, feas_tol)
}

/// Variable substitution `x_j = offset_j + Σ coef · y_k` into nonnegative `y`.
struct VarMap {
    offset: Vec<f64>,
    /// Per original variable: list of `(y index, coefficient)`.
    terms: Vec<Vec<(usize, f64)>>,
    /// `(y index, upper bound)` rows for doubly bounded variables.
    uppers: Vec<(usize, f64)>,
    n_y: usize,
}

impl VarMap {
    fn new(bounds: &[(Option<f64>, Option<f64>)]) -> Self {
        let mut offset = Vec::with_capacity(bounds.len());
        let mut terms = Vec::with_capacity(bounds.len());
        let mut uppers = Vec::new();
        let mut n_y = 0;
        for &(lo, hi) in bounds {
            match (lo, hi) {
                (Some(lo), hi) => {
                    offset.push(lo);
                    terms.push(vec![(n_y, 1.0)]);
                    if let Some(hi) = hi {
                        uppers.push((n_y, hi - lo));
                    }
                    n_y += 1;
                }
                (None, Some(hi)) => {
                    offset.push(hi);
                    terms.push(vec![(n_y, -1.0)]);
                    n_y += 1;
                }
                (None, None) => {
                    offset.push(0.0);
                    terms.push(vec![(n_y, 1.0), (n_y + 1, -1.0)]);
                    n_y += 2;
                }
            }
        }
        Self { offset, terms, uppers, n_y }
    }

    fn substitute(&self, row: &[f64]) -> (Vec<f64>, f64) {
        let mut out = vec![0.0; self.n_y];
        let mut shift = 0.0;
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            shift += a * self.offset[j];
            for &(k, c) in &self.terms[j] {
                out[k] += a * c;
            }
        }
        (out, shift)
    }

    fn recover(&self, y: &[f64]) -> Vec<f64> {
        self.offset
            .iter()
            .zip(&self.terms)
            .map(|(o, ts)| o + ts.iter().map(|&(k, c)| c * y[k]).sum::<f64>())
            .collect()
    }
}

fn solve_primal(lp: &LinearProgram, feas_tol: f64) -> Result<LpOutcome> {
    let map = VarMap::new(&lp.bounds);
    let n_ge = lp.ineq.rows();
    let n_up = map.uppers.len();
    let n_slack = n_ge + n_up;
    let n = map.n_y + n_slack;
    let m = n_ge + lp.eq.rows() + n_up;
    let mut a = vec![0.0; m * n];
    let mut b = vec![0.0; m];
    let mut row = 0;
    for i in 0..n_ge {
        let (coefs, shift) = map.substitute(lp.ineq.row(i));
        a[row * n..row * n + map.n_y].copy_from_slice(&coefs);
        a[row * n + map.n_y + i] = -1.0;
        b[row] = lp.ineq_rhs[i] - shift;
        row += 1;
    }
    for i in 0..lp.eq.rows() {
        let (coefs, shift) = map.substitute(lp.eq.row(i));
        a[row * n..row * n + map.n_y].copy_from_slice(&coefs);
        b[row] = lp.eq_rhs[i] - shift;
        row += 1;
    }
    for (u, &(k, ub)) in map.uppers.iter().enumerate() {
        a[row * n + k] = 1.0;
        a[row * n + map.n_y + n_ge + u] = 1.0;
        b[row] = ub;
        row += 1;
    }
    let (obj, _) = map.substitute(&lp.objective);
    let mut c: Vec<f64> = obj.iter().map(|v| -v).collect();
    c.extend(std::iter::repeat_n(0.0, n_slack));

    let sf = StandardForm { m, n, a, b, c };
    Ok(match solve_standard(&sf, feas_tol)? {
        StandardOutcome::Optimal { x, .. } => LpOutcome::optimal(lp, map.recover(&x[..map.n_y])),
        StandardOutcome::Infeasible => LpOutcome::without_point(LpStatus::Infeasible),
        StandardOutcome::Unbounded => LpOutcome::without_point(LpStatus::Unbounded),
    })
}

/// Dual of `max cᵀx, G x ≤ h, E x = f` is `min hᵀy + fᵀz, Gᵀy + Eᵀz = c, y ≥ 0`.
/// Returns `None` when the dual does not settle the primal cleanly.
fn solve_via_dual(lp: &LinearProgram, feas_tol: f64) -> Result<Option<LpOutcome>> {
    let n = lp.num_vars();
    let (g, h) = lp.as_le_rows();
    let n_g = g.len();
    let n_e = lp.eq.rows();
    // Columns: y (n_g), z+ (n_e), z- (n_e).
    let cols = n_g + 2 * n_e;
    let mut a = vec![0.0; n * cols];
    for (k, grow) in g.iter().enumerate() {
        for j in 0..n {
            a[j * cols + k] = grow[j];
        }
    }
    for e in 0..n_e {
        for j in 0..n {
            let v = lp.eq[(e, j)];
            a[j * cols + n_g + e] = v;
            a[j * cols + n_g + n_e + e] = -v;
        }
    }
    let mut cost = h.clone();
    cost.extend_from_slice(&lp.eq_rhs);
    cost.extend(lp.eq_rhs.iter().map(|v| -v));
    let sf = StandardForm { m: n, n: cols, a, b: lp.objective.clone(), c: cost };
    let StandardOutcome::Optimal { basis, .. } = solve_standard(&sf, feas_tol)? else {
        return Ok(None);
    };
    // Active primal constraints named by the dual basis.
    let mut sys = DenseMatrix::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for (i, col) in basis.iter().enumerate() {
        let Some(col) = *col else {
            return Ok(None);
        };
        if col < n_g {
            sys.set_row(i, &g[col]);
            rhs[i] = h[col];
        } else {
            let e = (col - n_g) % n_e.max(1);
            sys.set_row(i, lp.eq.row(e));
            rhs[i] = lp.eq_rhs[e];
        }
    }
    let lu = Lu::new(&sys);
    let Ok(x) = lu.solve(&rhs) else {
        return Ok(None);
    };
    if lp.relative_violation(&x) > feas_tol {
        return Ok(None);
    }
    Ok(Some(LpOutcome::optimal(lp, x)))
}

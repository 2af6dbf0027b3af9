//! Two-phase dense tableau simplex on the standard form
//! `min cᵀx  s.t.  A x = b, x ≥ 0`.
//!
//! Pricing is Dantzig (most negative reduced cost) and switches to Bland's
//! rule for the pivot following any degenerate step, which rules out cycling.
//! Rows and then columns are equilibrated by powers of two, and all
//! tolerances are relative to the magnitudes that enter each comparison, so
//! scaling `b` or `c` by a power of two reproduces the pivot sequence.

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Lu};

const PIVOT_TOL: f64 = 1e-11;
/// Pivots smaller than this fraction of the column's largest entry are
/// skipped; degenerate ties otherwise pick them and wreck the tableau.
const PIVOT_REL: f64 = 1e-7;
/// Floor for tableau entries in the pricing scale, so reduced costs made of
/// rounding residue in near-zero entries never price in.
const ENTRY_NOISE: f64 = 1e-3;
const COST_TOL: f64 = 1e-9;
/// A column without a pivot row proves unboundedness only when its reduced
/// cost clears this; below it the column is set aside as noise.
const UNBOUNDED_TOL: f64 = 1e-6;
const RATIO_TIE: f64 = 1e-12;

/// Problem in standard form. `a` is row-major `m × n`.
#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub m: usize,
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) enum StandardOutcome {
    /// `basis[i]` is the structural column basic in row `i`, or `None` when a
    /// redundant row kept its artificial.
    Optimal { x: Vec<f64>, basis: Vec<Option<usize>> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    m: usize,
    width: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
    limit: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width;
        let p = self.t[r * w + col];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        self.t[r * w + col] = 1.0;
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + col];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[col] = 0.0;
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    /// Minimizes `cost · x` over columns accepted by `allowed`.
    fn run(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<PhaseEnd> {
        let mut bland = false;
        let mut is_basic = vec![false; self.width - 1];
        let mut set_aside = vec![false; self.width - 1];
        loop {
            if self.pivots > self.limit {
                return Err(Error::CycleGuardExceeded { limit: self.limit });
            }
            is_basic.iter_mut().for_each(|b| *b = false);
            for &b in &self.basis {
                is_basic[b] = true;
            }
            let cb: Vec<f64> = self.basis.iter().map(|&b| cost[b]).collect();

            // Pricing.
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.width - 1 {
                if is_basic[j] || set_aside[j] || !allowed(j) {
                    continue;
                }
                let mut rc = cost[j];
                let mut scale = cost[j].abs();
                for (i, &c) in cb.iter().enumerate() {
                    if c != 0.0 {
                        let tij = self.at(i, j);
                        rc -= c * tij;
                        scale += c.abs() * (tij.abs() + ENTRY_NOISE);
                    }
                }
                if rc < -COST_TOL * scale && rc < 0.0 {
                    match entering {
                        None => entering = Some((j, rc, scale)),
                        Some((_, best, _)) if !bland && rc < best => entering = Some((j, rc, scale)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((col, rc, scale)) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            // Ratio test.
            let mut leave: Option<(usize, f64, f64)> = None;
            let amax = (0..self.m).fold(0.0f64, |acc, i| acc.max(self.at(i, col)));
            let floor = PIVOT_TOL.max(PIVOT_REL * amax);
            for i in 0..self.m {
                let a = self.at(i, col);
                if a <= floor {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                match leave {
                    None => leave = Some((i, ratio, a)),
                    Some((li, lr, la)) => {
                        let tie = (ratio - lr).abs() <= RATIO_TIE * lr.max(ratio);
                        let better = if tie {
                            if bland {
                                self.basis[i] < self.basis[li]
                            } else {
                                a > la
                            }
                        } else {
                            ratio < lr
                        };
                        if better {
                            leave = Some((i, ratio, a));
                        }
                    }
                }
            }
            let Some((row, ratio, _)) = leave else {
                if rc < -UNBOUNDED_TOL * scale {
                    return Ok(PhaseEnd::Unbounded);
                }
                set_aside[col] = true;
                continue;
            };
            bland = ratio == 0.0;
            set_aside.iter_mut().for_each(|s| *s = false);
            self.pivot(row, col);
        }
    }
}

/// Smallest power of two not below `v`.
fn pow2_ceil(v: f64) -> f64 {
    if v == 0.0 {
        1.0
    } else {
        2f64.powi(v.log2().ceil() as i32)
    }
}

pub(crate) fn solve_standard(sf: &StandardForm, feas_tol: f64) -> Result<StandardOutcome> {
    let (m, n) = (sf.m, sf.n);
    debug_assert_eq!(sf.a.len(), m * n);
    // Exact row equilibration by powers of two; orient rows so b ≥ 0.
    let mut a = sf.a.clone();
    let mut b = sf.b.clone();
    for i in 0..m {
        let row = &mut a[i * n..(i + 1) * n];
        let rmax = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut s = 1.0 / pow2_ceil(rmax);
        if b[i] < 0.0 {
            s = -s;
        }
        row.iter_mut().for_each(|v| *v *= s);
        b[i] *= s;
    }
    // Then columns, so no column is uniformly tiny against the pivot
    // tolerance. `x_j = col_scale[j] · x'_j`.
    let mut c = sf.c.clone();
    let mut col_scale = vec![1.0; n];
    for j in 0..n {
        let cmax = (0..m).fold(0.0f64, |acc, i| acc.max(a[i * n + j].abs()));
        if cmax == 0.0 {
            continue;
        }
        let s = 1.0 / pow2_ceil(cmax);
        for i in 0..m {
            a[i * n + j] *= s;
        }
        c[j] *= s;
        col_scale[j] = s;
    }

    let width = n + m + 1;
    let mut t = vec![0.0; m * width];
    for i in 0..m {
        t[i * width..i * width + n].copy_from_slice(&a[i * n..(i + 1) * n]);
        t[i * width + n + i] = 1.0;
        t[i * width + width - 1] = b[i];
    }
    let mut tab = Tableau {
        m,
        width,
        t,
        basis: (n..n + m).collect(),
        pivots: 0,
        limit: 50 * (m + n).max(1),
    };

    // Phase 1.
    let mut cost1 = vec![0.0; n + m];
    cost1[n..].iter_mut().for_each(|c| *c = 1.0);
    tab.run(&cost1, &|_| true)?;
    let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= n).map(|i| tab.rhs(i).abs()).sum();
    let bmax = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if infeas > feas_tol * bmax.max(f64::MIN_POSITIVE) {
        return Ok(StandardOutcome::Infeasible);
    }
    // Drive remaining artificials out where a structural pivot exists.
    for i in 0..m {
        if tab.basis[i] < n {
            continue;
        }
        let best = (0..n)
            .filter(|j| !tab.basis.contains(j))
            .map(|j| (j, tab.at(i, j).abs()))
            .fold(None, |acc: Option<(usize, f64)>, cur| match acc {
                Some(a) if a.1 >= cur.1 => Some(a),
                _ => Some(cur),
            });
        if let Some((j, mag)) = best {
            if mag > PIVOT_TOL {
                tab.pivot(i, j);
            }
        }
    }

    // Phase 2.
    let mut cost2 = c;
    cost2.extend(std::iter::repeat_n(0.0, m));
    if let PhaseEnd::Unbounded = tab.run(&cost2, &|j| j < n)? {
        return Ok(StandardOutcome::Unbounded);
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    if let Some(refined) = refine(&a, &b, m, n, &tab.basis, feas_tol) {
        x = refined;
    }
    x.iter_mut().zip(&col_scale).for_each(|(v, s)| *v *= s);
    let basis = tab.basis.iter().map(|&j| (j < n).then_some(j)).collect();
    Ok(StandardOutcome::Optimal { x, basis })
}

/// Recomputes basic values from the (scaled) original data by a fresh LU of
/// the basis matrix, removing drift accumulated in the tableau.
fn refine(a: &[f64], b: &[f64], m: usize, n: usize, basis: &[usize], feas_tol: f64) -> Option<Vec<f64>> {
    if m == 0 {
        return None;
    }
    let bm = DenseMatrix::from_fn(m, m, |i, k| {
        let j = basis[k];
        if j < n {
            a[i * n + j]
        } else if j - n == i {
            1.0
        } else {
            0.0
        }
    });
    let lu = Lu::new(&bm);
    let xb = lu.solve(b).ok()?;
    let scale = xb.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    for (k, &j) in basis.iter().enumerate() {
        if xb[k] < -feas_tol * scale {
            return None;
        }
        if j < n {
            x[j] = xb[k].max(0.0);
        } else if xb[k].abs() > feas_tol * scale {
            return None;
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_standard_form() {
        // min -x1 - x2, x1 + s1 = 1, x2 + s2 = 1.
        let sf = StandardForm {
            m: 2,
            n: 4,
            a: vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0],
            b: vec![1.0, 1.0],
            c: vec![-1.0, -1.0, 0.0, 0.0],
        };
        match solve_standard(&sf, 1e-9).unwrap() {
            StandardOutcome::Optimal { x, .. } => assert_eq!(&x[..2], &[1.0, 1.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        // x1 + x2 = 1 twice, min x1.
        let sf = StandardForm {
            m: 2,
            n: 2,
            a: vec![1.0, 1.0, 2.0, 2.0],
            b: vec![1.0, 2.0],
            c: vec![1.0, 0.0],
        };
        match solve_standard(&sf, 1e-9).unwrap() {
            StandardOutcome::Optimal { x, basis } => {
                assert_eq!(x, vec![0.0, 1.0]);
                assert!(basis.contains(&None));
            }
            other => panic!("{other:?}"),
        }
    }
}

//! Extreme rays of the polyhedral cone `{y : H y ≥ 0}` by the double
//! description method.
//!
//! The cone starts as the simplicial cone cut out by `r` independent rows of
//! `H` (its rays are the columns of that block's inverse) and the remaining
//! rows are inserted one at a time. Each insertion keeps rays on the
//! nonnegative side, drops the negative ones and joins every adjacent
//! positive/negative pair across the new hyperplane. Adjacency uses the
//! combinatorial test on zero sets, which are tracked as bitsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, norm2, numerical_rank, DenseMatrix, Lu};

pub const DEFAULT_RAY_CAP: usize = 100_000;

/// Extreme rays of the dual cone `{y : H y ≥ 0}` with their active rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeRaySet {
    /// Unit-length rays.
    pub rays: Vec<Vec<f64>>,
    /// Per ray, the rows `n` of `H` with `H[n]·y = 0` (within tolerance).
    pub active_sets: Vec<Vec<usize>>,
}

impl ExtremeRaySet {
    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }
}

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    fn is_superset_of(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == *b)
    }
}

struct Ray {
    y: Vec<f64>,
    zeros: Bits,
}

fn unit(mut y: Vec<f64>) -> Vec<f64> {
    let n = norm2(&y);
    y.iter_mut().for_each(|v| *v /= n);
    y
}

/// Greedy pick of `r` well-conditioned rows: repeatedly take the row with the
/// largest component orthogonal to those already chosen.
fn pick_basis_rows(rows: &[Vec<f64>], r: usize) -> Vec<usize> {
    let mut residual: Vec<Vec<f64>> = rows.to_vec();
    let mut chosen = Vec::with_capacity(r);
    for _ in 0..r {
        let (best, _) = residual
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(i, v)| (i, norm2(v)))
            .fold((usize::MAX, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        chosen.push(best);
        let u = unit(residual[best].clone());
        for v in residual.iter_mut() {
            let d = dot(v, &u);
            v.iter_mut().zip(&u).for_each(|(a, b)| *a -= d * b);
        }
    }
    chosen
}

/// Enumerates all extreme rays of `{y : H y ≥ 0}`.
///
/// `h` must have rank `r = h.cols()`, in which case the cone is pointed.
/// `tol` bounds `|h·y|` for unit-normalized rows and rays when deciding that
/// a constraint is tight.
pub fn dual_cone_extreme_rays(h: &DenseMatrix, tol: f64) -> Result<ExtremeRaySet> {
    dual_cone_extreme_rays_capped(h, tol, DEFAULT_RAY_CAP)
}

pub fn dual_cone_extreme_rays_capped(h: &DenseMatrix, tol: f64, cap: usize) -> Result<ExtremeRaySet> {
    let (n, r) = h.shape();
    if r == 0 {
        return Err(Error::InvalidArgument("H has no columns".into()));
    }
    let rank = if n == 0 { 0 } else { numerical_rank(h, 1e-10) };
    if rank < r {
        return Err(Error::RankDeficient { expected: r, found: rank });
    }
    // Unit rows; zero rows impose nothing and are skipped.
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let v = h.row(i).to_vec();
            if norm2(&v) == 0.0 {
                v
            } else {
                unit(v)
            }
        })
        .collect();

    let basis = pick_basis_rows(&rows, r);
    let b = DenseMatrix::from_fn(r, r, |i, j| rows[basis[i]][j]);
    let inv = Lu::new(&b).inverse()?;
    let mut rays: Vec<Ray> = (0..r)
        .map(|j| {
            let mut zeros = Bits::new(n);
            for (i, &row) in basis.iter().enumerate() {
                if i != j {
                    zeros.set(row);
                }
            }
            Ray { y: unit(inv.col(j)), zeros }
        })
        .collect();

    for (idx, row) in rows.iter().enumerate() {
        if basis.contains(&idx) || norm2(row) == 0.0 {
            continue;
        }
        let vals: Vec<f64> = rays.iter().map(|ray| dot(row, &ray.y)).collect();
        let sign = |v: f64| {
            if v > tol {
                1
            } else if v < -tol {
                -1
            } else {
                0
            }
        };
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| sign(vals[k]) > 0).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| sign(vals[k]) < 0).collect();
        if neg.is_empty() {
            for (k, ray) in rays.iter_mut().enumerate() {
                if sign(vals[k]) == 0 {
                    ray.zeros.set(idx);
                }
            }
            continue;
        }

        let mut fresh = Vec::new();
        for &p in &pos {
            for &m in &neg {
                let common = rays[p].zeros.and(&rays[m].zeros);
                if (common.count() as usize) + 2 < r {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(k, other)| k == p || k == m || !other.zeros.is_superset_of(&common));
                if !adjacent {
                    continue;
                }
                let (vp, vm) = (vals[p], vals[m]);
                let y: Vec<f64> = rays[m].y.iter().zip(&rays[p].y).map(|(a, b)| vp * a - vm * b).collect();
                let mut zeros = common;
                zeros.set(idx);
                fresh.push(Ray { y: unit(y), zeros });
            }
        }

        let mut next: Vec<Ray> = Vec::with_capacity(pos.len() + fresh.len() + rays.len() - neg.len() - pos.len());
        for (k, mut ray) in rays.into_iter().enumerate() {
            match sign(vals[k]) {
                -1 => {}
                0 => {
                    ray.zeros.set(idx);
                    next.push(ray);
                }
                _ => next.push(ray),
            }
        }
        next.extend(fresh);
        if next.len() > cap {
            return Err(Error::ExplosionGuard { cap });
        }
        rays = next;
    }

    let mut out = ExtremeRaySet { rays: Vec::with_capacity(rays.len()), active_sets: Vec::with_capacity(rays.len()) };
    for ray in rays {
        // Near-duplicates can appear only through rounding in degenerate inputs.
        if out.rays.iter().any(|e| dot(e, &ray.y) > 1.0 - 1e-12) {
            continue;
        }
        let active = (0..n).filter(|&i| norm2(&rows[i]) > 0.0 && dot(&rows[i], &ray.y).abs() <= tol).collect();
        out.rays.push(ray.y);
        out.active_sets.push(active);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    fn has_ray(set: &ExtremeRaySet, dir: &[f64]) -> bool {
        let d = unit(dir.to_vec());
        set.rays.iter().any(|y| y.iter().zip(&d).all(|(a, b)| (a - b).abs() < 1e-12))
    }

    #[test]
    fn identity_gives_coordinate_rays() {
        let set = dual_cone_extreme_rays(&DenseMatrix::identity(3), 1e-9).unwrap();
        assert_eq!(set.len(), 3);
        for k in 0..3 {
            let mut e = vec![0.0; 3];
            e[k] = 1.0;
            assert!(has_ray(&set, &e));
        }
    }

    #[test]
    fn redundant_row_changes_nothing() {
        let set = dual_cone_extreme_rays(&m(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]), 1e-9).unwrap();
        assert_eq!(set.len(), 2);
        assert!(has_ray(&set, &[1.0, 0.0]) && has_ray(&set, &[0.0, 1.0]));
    }

    #[test]
    fn two_by_two_dense() {
        let set = dual_cone_extreme_rays(&m(&[vec![2.0, 1.0], vec![1.0, 2.0]]), 1e-9).unwrap();
        assert_eq!(set.len(), 2);
        assert!(has_ray(&set, &[2.0, -1.0]) && has_ray(&set, &[-1.0, 2.0]));
    }

    #[test]
    fn rank_deficient_is_rejected() {
        let h = m(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert!(matches!(dual_cone_extreme_rays(&h, 1e-9), Err(Error::RankDeficient { expected: 3, found: 2 })));
    }

    #[test]
    fn ray_cap_trips() {
        let rows: Vec<Vec<f64>> = (0..6)
            .flat_map(|i| {
                let t = i as f64;
                vec![vec![1.0, t.cos(), t.sin()], vec![1.0, (t + 0.5).cos(), (t + 0.5).sin()]]
            })
            .collect();
        assert!(matches!(dual_cone_extreme_rays_capped(&m(&rows), 1e-9, 3), Err(Error::ExplosionGuard { cap: 3 })));
    }
}

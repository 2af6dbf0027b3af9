//! Separability and sufficiently-scattered certification of a nonnegative `H`.
//!
//! `H` (N×r) is sufficiently scattered when its conic hull `cone(Hᵀ)` contains
//! the second-order cone `C` and the dual cone `cone(Hᵀ)* = {y : H y ≥ 0}`
//! touches the boundary of `C*` only along the coordinate rays. For closed
//! convex cones `C ⊆ cone(Hᵀ)` is equivalent to `cone(Hᵀ)* ⊆ C*`, which holds
//! iff every extreme ray of the polyhedral dual lies in `C*`. Because `C*` is
//! strictly convex, a point of the dual cone lies on `bd C*` only if it is a
//! multiple of a boundary extreme ray, so checking the rays settles both parts.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::cones::{soc_member, Membership, SecondOrderConeSpec};
use super::rays::{dual_cone_extreme_rays, ExtremeRaySet};
use crate::error::{Error, Result};
use crate::linprog::{solve_lp, LinearProgram, LpStatus, DEFAULT_FEAS_TOL};
use crate::numerics::{norm2, DenseMatrix};
use crate::par::{map_range, Exec};
use crate::rng::{rng_from, Rng};

/// Largest off-axis magnitude for a unit ray to count as a coordinate vector.
const COORD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScatterStatus {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertMode {
    Exact,
    Sampling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayMargin {
    pub ray: Vec<f64>,
    /// `y·1 − ‖y‖` for the unit ray.
    pub margin: f64,
    pub membership: Membership,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Certificate {
    None,
    /// Every extreme ray of the dual cone with its `C*` margin.
    Rays(Vec<RayMargin>),
    /// A dual-cone extreme ray outside `C*`: `C ⊄ cone(Hᵀ)`.
    RayOutsideCStar(RayMargin),
    /// A dual-cone extreme ray on `bd C*` that is not a coordinate axis.
    NonCoordinateBoundaryRay(RayMargin),
    /// A point of `C` (on its boundary) that no nonnegative combination of
    /// the rows of `H` reaches.
    PointOutsideCone(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterVerdict {
    pub separable: bool,
    /// `witnesses[k]` is a row of `H` proportional to `e_k`.
    pub witnesses: Vec<Option<usize>>,
    pub sufficiently_scattered: ScatterStatus,
    pub mode: CertMode,
    pub certificate: Certificate,
}

fn check_nonnegative(h: &DenseMatrix, tol: f64) -> Result<()> {
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    if h.min_entry() < -tol * scale {
        return Err(Error::InvalidArgument("H has negative entries".into()));
    }
    Ok(())
}

/// Looks for a row `α_k e_kᵀ` for every `k`: the row's `k`-th entry exceeds
/// `tol` and every other entry is at most `tol` times that entry.
pub fn check_separability(h: &DenseMatrix, tol: f64) -> (bool, Vec<Option<usize>>) {
    let r = h.cols();
    let mut witnesses = vec![None; r];
    for i in 0..h.rows() {
        let row = h.row(i);
        let (k, alpha) = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
        if alpha <= tol || witnesses[k].is_some() {
            continue;
        }
        if row.iter().enumerate().all(|(j, &v)| j == k || v.abs() <= tol * alpha) {
            witnesses[k] = Some(i);
        }
    }
    (witnesses.iter().all(Option::is_some), witnesses)
}

fn is_coordinate(y: &[f64]) -> Option<usize> {
    let (k, big) = y.iter().enumerate().fold((0, 0.0f64), |acc, (j, v)| if v.abs() > acc.1 { (j, v.abs()) } else { acc });
    let off_axis = y.iter().enumerate().all(|(j, v)| j == k || v.abs() <= COORD_TOL);
    (off_axis && y[k] > 0.0 && big > 0.0).then_some(k)
}

/// Exact certification through the dual cone's extreme rays.
pub fn check_sufficiently_scattered(h: &DenseMatrix, tol: f64) -> Result<ScatterVerdict> {
    let rays = dual_cone_extreme_rays(h, tol)?;
    check_nonnegative(h, tol)?;
    Ok(verdict_from_rays(h, &rays, tol))
}

/// Verdict from a precomputed ray set of `{y : H y ≥ 0}`.
pub fn verdict_from_rays(h: &DenseMatrix, rays: &ExtremeRaySet, tol: f64) -> ScatterVerdict {
    let r = h.cols();
    let (separable, witnesses) = check_separability(h, tol);
    let spec = SecondOrderConeSpec::c_star(r);
    let margins: Vec<RayMargin> = rays
        .rays
        .iter()
        .map(|y| RayMargin {
            ray: y.clone(),
            margin: spec.margin(y),
            membership: soc_member(y, spec, tol).expect("rays are unit length"),
        })
        .collect();
    let verdict = |status, certificate| ScatterVerdict {
        separable,
        witnesses: witnesses.clone(),
        sufficiently_scattered: status,
        mode: CertMode::Exact,
        certificate,
    };

    if let Some(bad) = margins.iter().find(|m| m.membership == Membership::Outside) {
        return verdict(ScatterStatus::No, Certificate::RayOutsideCStar(bad.clone()));
    }
    if let Some(bad) = margins.iter().find(|m| m.membership == Membership::Boundary && is_coordinate(&m.ray).is_none()) {
        return verdict(ScatterStatus::No, Certificate::NonCoordinateBoundaryRay(bad.clone()));
    }
    // With H ≥ 0 every e_k lies in the dual cone and on bd C*; once the dual
    // cone sits inside C*, each e_k must therefore be one of its extreme rays.
    let mut seen = vec![false; r];
    for m in &margins {
        if let Some(k) = is_coordinate(&m.ray) {
            seen[k] = true;
        }
    }
    if !seen.iter().all(|&s| s) {
        return verdict(ScatterStatus::Unknown, Certificate::Rays(margins));
    }
    verdict(ScatterStatus::Yes, Certificate::Rays(margins))
}

/// A point on `bd C`: the unit vector at angle `acos(√((r−1)/r))` from the
/// all-ones direction, rotated toward a random orthogonal direction.
pub fn sample_boundary_of_c(r: usize, rng: &mut Rng) -> Vec<f64> {
    let center = 1.0 / (r as f64).sqrt();
    loop {
        let mut u: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
        let mean = u.iter().sum::<f64>() / r as f64;
        u.iter_mut().for_each(|v| *v -= mean);
        let nu = norm2(&u);
        if nu < 1e-8 {
            continue;
        }
        let cos_t = (((r - 1) as f64) / r as f64).sqrt();
        let sin_t = (1.0 / r as f64).sqrt();
        return u.iter().map(|v| cos_t * center + sin_t * v / nu).collect();
    }
}

/// Whether `x` is a nonnegative combination of the rows of `h`.
pub fn in_row_cone(h: &DenseMatrix, x: &[f64]) -> Result<bool> {
    let n = h.rows();
    let lp = LinearProgram::new(vec![0.0; n])
        .with_eq(h.transpose(), x.to_vec())
        .with_bounds(vec![(Some(0.0), None); n]);
    Ok(solve_lp(&lp, DEFAULT_FEAS_TOL)?.status == LpStatus::Optimal)
}

/// Sampling refuter: tests `n_samples` points of `bd C` for membership in
/// `cone(Hᵀ)`. Returns `No` with the lowest-index failing point, otherwise
/// `Unknown`. Samples use independent substreams, so the verdict is the same
/// under either execution strategy.
pub fn refute_by_sampling(h: &DenseMatrix, n_samples: usize, seed: u64, exec: Exec) -> Result<ScatterVerdict> {
    check_nonnegative(h, DEFAULT_FEAS_TOL)?;
    let r = h.cols();
    let (separable, witnesses) = check_separability(h, DEFAULT_FEAS_TOL);
    let results = map_range(exec, n_samples, |i| -> Result<Option<Vec<f64>>> {
        let mut rng = rng_from(&[seed.into(), "bd-c".into(), i.into()]);
        let x = sample_boundary_of_c(r, &mut rng);
        Ok((!in_row_cone(h, &x)?).then_some(x))
    });
    let mut status = ScatterStatus::Unknown;
    let mut certificate = Certificate::None;
    for res in results {
        if let Some(x) = res? {
            status = ScatterStatus::No;
            certificate = Certificate::PointOutsideCone(x);
            break;
        }
    }
    Ok(ScatterVerdict { separable, witnesses, sufficiently_scattered: status, mode: CertMode::Sampling, certificate })
}

/// A random `A` whose columns lie in `cone(Hᵀ)*` with `1ᵀa_i = 1`: every
/// column is a random nonnegative combination of one to `r` extreme rays.
/// These are exactly the transforms that keep `H A` feasible for the
/// column-sum-constrained problem.
pub fn sample_feasible_transform(rays: &ExtremeRaySet, r: usize, rng: &mut Rng) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(r, r);
    for col in 0..r {
        loop {
            let k = rng.random_range(1..=r.min(rays.len()));
            let mut v = vec![0.0; r];
            for _ in 0..k {
                let idx = rng.random_range(0..rays.len());
                let w: f64 = rng.random_range(0.0..1.0);
                v.iter_mut().zip(&rays.rays[idx]).for_each(|(a, b)| *a += w * b);
            }
            let s: f64 = v.iter().sum();
            if s > 1e-12 {
                a.set_col(col, &v.iter().map(|x| x / s).collect::<Vec<_>>());
                break;
            }
        }
    }
    a
}

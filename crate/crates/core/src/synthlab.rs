//! Synthetic instances `X = W Hᵀ` and the permutation-matched MSE between
//! factor estimates.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_sufficiently_scattered, refute_by_sampling, ScatterStatus, ScatterVerdict, DEFAULT_CONE_TOL};
use crate::numerics::{numerical_rank, DenseMatrix};
use crate::par::Exec;
use crate::rng::{derive_seed, rng_from, Rng};

/// Regenerations allowed before giving up on a certifiable instance.
pub const GEN_ATTEMPTS: usize = 20;

const RANK_TOL: f64 = 1e-10;

/// How `W` is drawn. `H` is always uniform with exact-count zeroing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    /// `W` drawn like `H`: uniform entries with the same zero fraction.
    SparseW,
    /// `W` uniform on `[0, 1)`.
    DenseW,
    /// `W` standard normal.
    GaussianW,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::SparseW, Case::DenseW, Case::GaussianW];

    pub fn as_str(self) -> &'static str {
        match self {
            Case::SparseW => "sparse-w",
            Case::DenseW => "dense-w",
            Case::GaussianW => "gaussian-w",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown case '{s}' (expected sparse-w, dense-w or gaussian-w)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertifyMode {
    None,
    /// Sampling refuter with this many boundary points of `C`.
    Sampling(usize),
    Exact,
}

impl fmt::Display for CertifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertifyMode::None => f.write_str("none"),
            CertifyMode::Sampling(k) => write!(f, "sampling:{k}"),
            CertifyMode::Exact => f.write_str("exact"),
        }
    }
}

impl FromStr for CertifyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(CertifyMode::None),
            "exact" => Ok(CertifyMode::Exact),
            _ => s
                .strip_prefix("sampling:")
                .and_then(|k| k.parse().ok())
                .filter(|k| *k > 0)
                .map(CertifyMode::Sampling)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown certify mode '{s}' (expected none, sampling:K or exact)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub case: Case,
    /// Fraction of entries zeroed in the sparse factors.
    pub sparsity: f64,
    /// Column sum of the stored `H`.
    pub rho: f64,
    pub seed: u64,
    pub certify: CertifyMode,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self { m: 200, n: 200, r: 5, case: Case::SparseW, sparsity: 0.35, rho: 1.0, seed: 0, certify: CertifyMode::None }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > self.m.min(self.n) {
            return Err(Error::InvalidArgument(format!("rank {} outside 1..={}", self.r, self.m.min(self.n))));
        }
        if !(0.0..1.0).contains(&self.sparsity) {
            return Err(Error::InvalidArgument(format!("sparsity {} outside [0, 1)", self.sparsity)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {}", self.rho)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    /// `w_true · h_trueᵀ`, computed once.
    pub x: DenseMatrix,
    pub w_true: DenseMatrix,
    pub h_true: DenseMatrix,
    pub spec: GenSpec,
    /// Certifier verdict on `h_true`; `None` when certification is off.
    pub scatter_report: Option<ScatterVerdict>,
    /// Verdict on `w_true` for the sparse-W case.
    pub w_scatter_report: Option<ScatterVerdict>,
    /// Draws used, starting at 1.
    pub attempts: usize,
}

fn uniform(rng: &mut Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>())
}

/// Uniform entries with exactly `floor(sparsity · rows · cols)` zeros.
fn sparse_uniform(rng: &mut Rng, rows: usize, cols: usize, sparsity: f64) -> DenseMatrix {
    let mut a = uniform(rng, rows, cols);
    let total = rows * cols;
    let zeros = ((sparsity * total as f64).floor() as usize).min(total);
    let mut data = std::mem::replace(&mut a, DenseMatrix::zeros(0, 0)).into_vec();
    for i in sample(rng, total, zeros) {
        data[i] = 0.0;
    }
    DenseMatrix::from_vec(rows, cols, data).expect("shape preserved")
}

fn certify(h: &DenseMatrix, mode: CertifyMode, seed: u64) -> Result<Option<ScatterVerdict>> {
    match mode {
        CertifyMode::None => Ok(None),
        CertifyMode::Exact => check_sufficiently_scattered(h, DEFAULT_CONE_TOL).map(Some),
        CertifyMode::Sampling(k) => refute_by_sampling(h, k, seed, Exec::default()).map(Some),
    }
}

/// Draws an instance. Redraws from a fresh substream while a factor is rank
/// deficient or the certifier refutes `H`.
pub fn generate(spec: &GenSpec) -> Result<Instance> {
    spec.validate()?;
    let (m, n, r) = (spec.m, spec.n, spec.r);
    for attempt in 0..GEN_ATTEMPTS {
        let mut rng = rng_from(&[spec.seed.into(), "gen".into(), attempt.into()]);
        let mut w = match spec.case {
            Case::SparseW => sparse_uniform(&mut rng, m, r, spec.sparsity),
            Case::DenseW => uniform(&mut rng, m, r),
            Case::GaussianW => DenseMatrix::from_fn(m, r, |_, _| rng.sample(StandardNormal)),
        };
        let mut h = sparse_uniform(&mut rng, n, r, spec.sparsity);
        let sums = h.col_sums();
        if sums.contains(&0.0) {
            continue;
        }
        h = h.scale_cols(&sums.iter().map(|s| spec.rho / s).collect::<Vec<_>>());
        w = w.scale_cols(&sums.iter().map(|s| s / spec.rho).collect::<Vec<_>>());
        if numerical_rank(&h, RANK_TOL) < r || numerical_rank(&w, RANK_TOL) < r {
            continue;
        }
        let cert_seed = derive_seed(&[spec.seed.into(), "certify".into(), attempt.into()]);
        let report = certify(&h, spec.certify, cert_seed)?;
        if report.as_ref().is_some_and(|v| v.sufficiently_scattered == ScatterStatus::No) {
            continue;
        }
        let w_report = if spec.case == Case::SparseW { certify(&w, spec.certify, cert_seed)? } else { None };
        let x = w.matmul_t(&h);
        return Ok(Instance { x, w_true: w, h_true: h, spec: spec.clone(), scatter_report: report, w_scatter_report: w_report, attempts: attempt + 1 });
    }
    Err(Error::CertifyBudgetExceeded { attempts: GEN_ATTEMPTS })
}

fn unit_columns(h: &DenseMatrix) -> Result<Vec<Vec<f64>>> {
    (0..h.cols())
        .map(|j| {
            let c = h.col(j);
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::ZeroColumn(j));
            }
            Ok(c.into_iter().map(|v| v / norm).collect())
        })
        .collect()
}

/// Mean squared distance between unit-normalized columns of `h_est` and
/// `h_ref`, minimized over column permutations.
pub fn mse(h_est: &DenseMatrix, h_ref: &DenseMatrix) -> Result<f64> {
    if h_est.shape() != h_ref.shape() {
        return Err(Error::ShapeMismatch(format!("estimate is {:?}, reference is {:?}", h_est.shape(), h_ref.shape())));
    }
    let r = h_ref.cols();
    if r == 0 {
        return Err(Error::InvalidArgument("no columns".into()));
    }
    let est = unit_columns(h_est)?;
    let reference = unit_columns(h_ref)?;
    // Normalizing a rescaled column reproduces the original only up to
    // rounding; distances within that bound are zero.
    let noise = (h_ref.rows() as f64 * f64::EPSILON).powi(2);
    let cost: Vec<Vec<f64>> = reference
        .iter()
        .map(|h| {
            est.iter()
                .map(|e| {
                    let d: f64 = e.iter().zip(h).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d <= noise { 0.0 } else { d }
                })
                .collect()
        })
        .collect();
    let assignment = hungarian(&cost);
    let total: f64 = assignment.iter().enumerate().map(|(k, &j)| cost[k][j]).sum();
    Ok(total / r as f64)
}

/// Minimum-cost perfect assignment on a square cost matrix; `result[row]` is
/// the column matched to `row`. Shortest augmenting paths with potentials,
/// O(n³).
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays; index 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for j in 1..=n {
        result[owner[j] - 1] = j - 1;
    }
    result
}

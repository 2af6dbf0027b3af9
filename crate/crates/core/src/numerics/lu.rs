//! LU factorization with partial pivoting and the determinant kernels built on it.

use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};

/// Packed `PA = LU` factorization of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn new(a: &DenseMatrix) -> Self {
        assert!(a.is_square(), "LU of non-square matrix");
        let n = a.rows();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Self { n, lu, perm, sign, singular }
    }

    pub fn determinant(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        (0..self.n).fold(self.sign, |d, i| d * self.lu[i * self.n + i])
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.singular {
            return Err(Error::Singular);
        }
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu[i * n..i * n + i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu[i * n + i + 1..(i + 1) * n], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::Singular)
        }
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.singular {
            return Err(Error::Singular);
        }
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ w = z, x = Pᵀ w.
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.lu[k * n + i] * z[k];
            }
            z[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.lu[k * n + i] * z[k];
            }
            z[i] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::Singular)
        }
    }

    pub fn inverse(&self) -> Result<DenseMatrix> {
        let n = self.n;
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            inv.set_col(j, &self.solve(&e)?);
        }
        Ok(inv)
    }
}

/// Determinant by LU with partial pivoting. Singular input yields 0.
pub fn determinant(q: &DenseMatrix) -> f64 {
    assert!(q.is_square(), "determinant of non-square matrix");
    if q.rows() == 0 {
        return 1.0;
    }
    Lu::new(q).determinant()
}

pub fn inverse(q: &DenseMatrix) -> Result<DenseMatrix> {
    Lu::new(q).inverse()
}

/// `q` with row `i` and column `j` removed.
pub fn minor(q: &DenseMatrix, i: usize, j: usize) -> DenseMatrix {
    let n = q.rows();
    DenseMatrix::from_fn(n - 1, n - 1, |a, b| {
        q[(if a < i { a } else { a + 1 }, if b < j { b } else { b + 1 })]
    })
}

/// Signed cofactors along row `k`: `p[j] = (-1)^(k+j) det(minor(k, j))`,
/// so that `p · q.row(k) == det(q)`.
///
/// Each entry is independent of row `k` itself, which is what makes the
/// determinant affine in that row.
pub fn cofactor_vector(q: &DenseMatrix, k: usize) -> Vec<f64> {
    assert!(q.is_square() && k < q.rows());
    let n = q.rows();
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|j| {
            let sign = if (k + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * determinant(&minor(q, k, j))
        })
        .collect()
}

/// `det(WᵀW)`, clamped at zero.
pub fn gram_det(w: &DenseMatrix) -> f64 {
    assert!(w.rows() >= w.cols(), "gram_det needs rows >= cols");
    determinant(&w.t_matmul(w)).max(0.0)
}

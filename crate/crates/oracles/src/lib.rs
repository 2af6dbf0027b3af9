//! Brute-force reference computations for tests.
//!
//! Nothing here shares code with the library: matrices are plain nested
//! vectors, determinants come from Laplace expansion, linear systems from
//! naive Gauss-Jordan elimination, and optimizations from exhaustive
//! enumeration. Every routine is exponential or factorial and meant only for
//! tiny inputs.

pub type Mat = Vec<Vec<f64>>;

/// Determinant by recursive cofactor expansion along the first row.
pub fn laplace_det(a: &Mat) -> f64 {
    let n = a.len();
    match n {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        _ => (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[0][j] * laplace_det(&minor(a, 0, j))
            })
            .sum(),
    }
}

/// Cofactor expansion along row `k`.
pub fn laplace_det_along_row(a: &Mat, k: usize) -> f64 {
    (0..a.len())
        .map(|j| {
            let sign = if (k + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * a[k][j] * laplace_det(&minor(a, k, j))
        })
        .sum()
}

pub fn minor(a: &Mat, row: usize, col: usize) -> Mat {
    a.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, v)| *v).collect())
        .collect()
}

/// Gauss-Jordan with full pivoting; `None` when singular to `tol`.
pub fn solve_square(a: &Mat, b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = a.len();
    let mut m: Mat = a.iter().zip(b).map(|(r, &bi)| r.iter().copied().chain([bi]).collect()).collect();
    let mut col_of: Vec<usize> = (0..n).collect();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for k in 0..n {
        let mut best = (k, k, 0.0);
        for i in k..n {
            for j in k..n {
                if m[i][j].abs() > best.2 {
                    best = (i, j, m[i][j].abs());
                }
            }
        }
        if best.2 <= tol * scale {
            return None;
        }
        m.swap(k, best.0);
        for row in m.iter_mut() {
            row.swap(k, best.1);
        }
        col_of.swap(k, best.1);
        let p = m[k][k];
        for v in m[k].iter_mut() {
            *v /= p;
        }
        for i in 0..n {
            if i != k {
                let f = m[i][k];
                if f != 0.0 {
                    for j in 0..=n {
                        m[i][j] -= f * m[k][j];
                    }
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in 0..n {
        x[col_of[k]] = m[k][n];
    }
    Some(x)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// A bounded LP `max c·x` with `A x ≥ b`, `E x = f`, `lo ≤ x ≤ hi`.
pub struct BoxLp {
    pub c: Vec<f64>,
    pub a: Mat,
    pub b: Vec<f64>,
    pub e: Mat,
    pub f: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Optimum by enumerating every vertex candidate: all equality rows plus
/// every choice of `n − |E|` inequality/bound rows held tight. `None` when no
/// candidate is feasible (the box makes the problem bounded).
pub fn lp_vertex_enumeration(lp: &BoxLp, feas_tol: f64) -> Option<f64> {
    let n = lp.c.len();
    let mut rows: Mat = lp.a.clone();
    let mut rhs = lp.b.clone();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push(e.clone());
        rhs.push(lp.lo[j]);
        e[j] = -1.0;
        rows.push(e);
        rhs.push(-lp.hi[j]);
    }
    let k = n.checked_sub(lp.e.len())?;
    let feasible = |x: &[f64]| {
        let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        rows.iter().zip(&rhs).all(|(r, &bi)| dot(r) >= bi - feas_tol * (1.0 + bi.abs()))
            && lp.e.iter().zip(&lp.f).all(|(r, &fi)| (dot(r) - fi).abs() <= feas_tol * (1.0 + fi.abs()))
    };
    let mut best: Option<f64> = None;
    for subset in subsets(rows.len(), k) {
        let mut sys: Mat = lp.e.clone();
        let mut sb = lp.f.clone();
        for &i in &subset {
            sys.push(rows[i].clone());
            sb.push(rhs[i]);
        }
        let Some(x) = solve_square(&sys, &sb, 1e-12) else { continue };
        if feasible(&x) {
            let v: f64 = lp.c.iter().zip(&x).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(v, |bv: f64| bv.max(v)));
        }
    }
    best
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Generalized cross product: a vector orthogonal to the `r−1` rows of `a`
/// (each of length `r`), zero when they are dependent.
pub fn cross_null(a: &Mat) -> Vec<f64> {
    let r = a.len() + 1;
    (0..r)
        .map(|j| {
            let sub: Mat = a.iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect()).collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * laplace_det(&sub)
        })
        .collect()
}

/// Extreme rays of `{y : H y ≥ 0}` by exhaustive active-set enumeration:
/// every `(r−1)`-subset of rows whose null space is one-dimensional yields a
/// candidate direction `±y`; feasible candidates are kept and deduplicated.
/// Rays are unit length.
pub fn dual_cone_rays_bruteforce(h: &Mat, tol: f64) -> Vec<Vec<f64>> {
    let r = h[0].len();
    let mut rays: Vec<Vec<f64>> = Vec::new();
    let hnorms: Vec<f64> = h.iter().map(|row| row.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    for subset in subsets(h.len(), r - 1) {
        let a: Mat = subset.iter().map(|&i| h[i].clone()).collect();
        let y = cross_null(&a);
        let scale: f64 = a.iter().map(|row| row.iter().map(|x| x.abs()).sum::<f64>()).product::<f64>().max(1e-300);
        if y.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-10 * scale {
            continue;
        }
        let y = unit(y);
        for cand in [y.clone(), y.iter().map(|x| -x).collect::<Vec<_>>()] {
            let ok = h.iter().zip(&hnorms).all(|(row, &hn)| {
                row.iter().zip(&cand).map(|(a, b)| a * b).sum::<f64>() >= -tol * hn
            });
            if ok && !rays.iter().any(|e| angle_close(e, &cand, 1e-8)) {
                rays.push(cand);
            }
        }
    }
    rays
}

/// True when unit vectors `a` and `b` point the same way within `tol` radians.
pub fn angle_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    d <= tol
}

/// Two ray sets are equal as unordered sets of directions.
pub fn same_ray_sets(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| b.iter().any(|y| angle_close(x, y, tol)))
        && b.iter().all(|y| a.iter().any(|x| angle_close(x, y, tol)))
}

/// Permutation-matched MSE between unit-normalized columns, by trying every
/// permutation. `h_est`, `h_ref` are given row-major as `n × r`.
pub fn mse_bruteforce(h_est: &Mat, h_ref: &Mat) -> f64 {
    let r = h_ref[0].len();
    let cols = |m: &Mat| -> Mat {
        (0..r)
            .map(|k| unit(m.iter().map(|row| row[k]).collect()))
            .collect()
    };
    let (e, t) = (cols(h_est), cols(h_ref));
    permutations(r)
        .into_iter()
        .map(|p| {
            (0..r)
                .map(|k| t[k].iter().zip(&e[p[k]]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .sum::<f64>()
                / r as f64
        })
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean projection onto `{h ≥ 0, Σh = rho}` as a quadratic program solved
/// by enumerating supports: for each support set the equality-constrained
/// minimizer is a uniform shift; the feasible candidate nearest `v` wins.
pub fn simplex_projection_bruteforce(v: &[f64], rho: f64) -> Vec<f64> {
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 1..=n {
        for support in subsets(n, k) {
            let shift = (support.iter().map(|&i| v[i]).sum::<f64>() - rho) / k as f64;
            let mut x = vec![0.0; n];
            let mut ok = true;
            for &i in &support {
                x[i] = v[i] - shift;
                if x[i] < -1e-15 {
                    ok = false;
                }
            }
            if !ok {
                continue;
            }
            let d: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, x));
            }
        }
    }
    best.expect("simplex is nonempty").1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_small() {
        assert_eq!(laplace_det(&vec![vec![2.0, 0.0], vec![0.0, 3.0]]), 6.0);
        let a = vec![vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 4.0], vec![5.0, 6.0, 0.0]];
        assert_eq!(laplace_det(&a), 1.0);
        assert_eq!(laplace_det_along_row(&a, 2), 1.0);
    }

    #[test]
    fn enumerations() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn rays_of_identity() {
        let h = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(dual_cone_rays_bruteforce(&h, 1e-12).len(), 3);
    }

    #[test]
    fn projection_example() {
        let p = simplex_projection_bruteforce(&[0.5, 0.8, -0.1], 1.0);
        assert!((p[0] - 0.35).abs() < 1e-15 && (p[1] - 0.65).abs() < 1e-15 && p[2] == 0.0);
    }
}

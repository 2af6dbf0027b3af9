use nmfid::numerics::{determinant, gram_det, inverse, svd_reduce, DenseMatrix, DEFAULT_RANK_TOL};
use nmfid::solver::{ao_sweep, init_q, solve_proposed, solve_reduced, InitStrategy, SolverOptions};
use nmfid::synthlab::{generate, mse, Case, CertifyMode, GenSpec};
use nmfid::Error;

fn normalize_cols(h: &DenseMatrix) -> DenseMatrix {
    let sums = h.col_sums();
    h.scale_cols(&sums.iter().map(|s| 1.0 / s).collect::<Vec<_>>())
}

/// Least-squares `A` with `h_ref · A ≈ h_est`.
fn pseudo_solve(h_ref: &DenseMatrix, h_est: &DenseMatrix) -> DenseMatrix {
    inverse(&h_ref.t_matmul(h_ref)).unwrap().matmul(&h_ref.t_matmul(h_est))
}

fn small_certified(seed: u64, r: usize) -> nmfid::synthlab::Instance {
    generate(&GenSpec { m: 30, n: 30, r, case: Case::DenseW, seed, certify: CertifyMode::Exact, ..Default::default() }).unwrap()
}

#[test]
fn two_by_two_ground_truth() {
    let w = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let h = normalize_cols(&DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0]]).unwrap());
    let x = w.matmul_t(&h);
    for init in [InitStrategy::SpaInit, InitStrategy::RandomFeasible] {
        let res = solve_proposed(&x, 2, &SolverOptions { init, ..Default::default() }).unwrap();
        assert!(mse(&res.h, &h).unwrap() < 1e-10);
        assert!(res.converged);
    }
}

#[test]
fn recovery_with_certified_scattering() {
    for seed in 0..10 {
        let inst = small_certified(seed, 3 + (seed as usize % 2));
        let res = solve_proposed(&inst.x, inst.spec.r, &SolverOptions::default()).unwrap();
        assert!(mse(&res.h, &inst.h_true).unwrap() < 1e-10, "seed {seed}");
        let a = pseudo_solve(&inst.h_true, &res.h);
        for j in 0..a.cols() {
            let col = a.col(j);
            let big = col.iter().cloned().fold(0.0, f64::max);
            assert!(big > 0.0);
            assert_eq!(col.iter().filter(|v| (*v / big - 1.0).abs() <= 1e-6).count(), 1);
            assert!(col.iter().all(|v| (*v / big).abs() <= 1e-6 || (*v / big - 1.0).abs() <= 1e-6), "seed {seed}: {a:?}");
        }
    }
}

#[test]
fn feasibility_and_objective_identity() {
    for (seed, case) in [(1, Case::SparseW), (2, Case::DenseW), (3, Case::GaussianW)] {
        let inst = generate(&GenSpec { m: 60, n: 80, r: 4, case, seed, ..Default::default() }).unwrap();
        let res = solve_proposed(&inst.x, 4, &SolverOptions::default()).unwrap();
        assert!(res.residuals.min_h >= -1e-9);
        assert!(res.residuals.colsum <= 1e-8);
        assert!(res.residuals.reconstruction <= 1e-8);
        let model = svd_reduce(&inst.x, 4, DEFAULT_RANK_TOL).unwrap();
        let sig2: f64 = model.sigma.iter().map(|s| s * s).product();
        let dq = determinant(res.q.as_ref().unwrap());
        let expected = sig2 / (dq * dq);
        assert!((gram_det(&res.w) - expected).abs() <= 1e-8 * expected);
    }
}

#[test]
fn traces_never_decrease() {
    for seed in 0..12 {
        let inst = generate(&GenSpec { m: 40, n: 50, r: 3 + (seed as usize % 3), case: Case::GaussianW, seed, ..Default::default() }).unwrap();
        for init in [InitStrategy::SpaInit, InitStrategy::RandomFeasible] {
            let res = solve_proposed(&inst.x, inst.spec.r, &SolverOptions { init, seed, ..Default::default() }).unwrap();
            assert!(res.objective_trace.windows(2).all(|p| p[1] >= p[0]), "{:?}", res.objective_trace);
        }
    }
}

#[test]
fn sweep_from_feasible_q_does_not_lose_volume() {
    for seed in 0..8 {
        let inst = generate(&GenSpec { m: 30, n: 40, r: 4, case: Case::DenseW, seed, ..Default::default() }).unwrap();
        let model = svd_reduce(&inst.x, 4, DEFAULT_RANK_TOL).unwrap();
        let opts = SolverOptions { init: InitStrategy::RandomFeasible, seed, ..Default::default() };
        let mut q = init_q(&model, &opts).unwrap();
        for _ in 0..5 {
            let before = determinant(&q).abs();
            q = ao_sweep(&q, &model, &opts).unwrap().q;
            assert!(determinant(&q).abs() >= before - 1e-12 * before);
        }
    }
}

#[test]
fn ground_truth_is_a_fixed_point() {
    for seed in 0..5 {
        let inst = small_certified(seed, 3);
        let model = svd_reduce(&inst.x, 3, DEFAULT_RANK_TOL).unwrap();
        // Hᵀ = Q X̃ with orthonormal rows of X̃, so Q = Hᵀ X̃ᵀ.
        let q = inst.h_true.t_matmul(&model.xtilde.transpose());
        let sweep = ao_sweep(&q, &model, &SolverOptions::default()).unwrap();
        assert!(!sweep.improved, "seed {seed}");
    }
}

#[test]
fn rho_scales_exactly() {
    let inst = generate(&GenSpec { m: 40, n: 40, r: 4, case: Case::GaussianW, seed: 9, ..Default::default() }).unwrap();
    for init in [InitStrategy::SpaInit, InitStrategy::RandomFeasible] {
        let one = solve_proposed(&inst.x, 4, &SolverOptions { init, seed: 5, ..Default::default() }).unwrap();
        let two = solve_proposed(&inst.x, 4, &SolverOptions { init, seed: 5, rho: 2.0, ..Default::default() }).unwrap();
        assert_eq!(two.h, one.h.scale(2.0));
        assert_eq!(two.w, one.w.scale(0.5));
        assert_eq!(two.sweeps, one.sweeps);
    }
}

#[test]
fn random_init_is_deterministic() {
    let inst = generate(&GenSpec { m: 20, n: 30, r: 3, seed: 4, ..Default::default() }).unwrap();
    let model = svd_reduce(&inst.x, 3, DEFAULT_RANK_TOL).unwrap();
    let opts = SolverOptions { init: InitStrategy::RandomFeasible, seed: 17, ..Default::default() };
    assert_eq!(init_q(&model, &opts).unwrap(), init_q(&model, &opts).unwrap());
}

#[test]
fn spa_init_is_feasible_on_separable_data() {
    let r = 3;
    // Rows are convex combinations of the pure rows e_k before column scaling.
    let mut h = DenseMatrix::from_fn(12, r, |i, j| ((i * 5 + j * 3) % 7) as f64 + 0.5);
    for i in 0..12 {
        let total: f64 = h.row(i).iter().sum();
        h.row_mut(i).iter_mut().for_each(|v| *v /= total);
    }
    for k in 0..r {
        let mut e = vec![0.0; r];
        e[k] = 1.0;
        h.set_row(k * 4, &e);
    }
    let h = normalize_cols(&h);
    let w = DenseMatrix::from_fn(8, r, |i, j| 1.0 / (i + j + 1) as f64 - 0.1);
    let x = w.matmul_t(&h);
    let model = svd_reduce(&x, r, DEFAULT_RANK_TOL).unwrap();
    let q0 = init_q(&model, &SolverOptions::default()).unwrap();
    assert!(q0.matmul(&model.xtilde).min_entry() >= -1e-12);
}

#[test]
fn identity_data() {
    let x = DenseMatrix::identity(3);
    let res = solve_proposed(&x, 3, &SolverOptions::default()).unwrap();
    let q = res.q.unwrap();
    // Every column of X is a vertex: Q must map X̃ onto a permutation.
    assert!((determinant(&q).abs() - 1.0).abs() < 1e-12);
    assert!(mse(&res.h, &x).unwrap() < 1e-20);
}

#[test]
fn not_scattered_input_stays_feasible() {
    let idx = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let base = [2.0, 1.0, 0.0];
    let h = normalize_cols(&DenseMatrix::from_fn(12, 3, |i, j| base[idx[i % 6][j]] + if i >= 6 { 0.5 } else { 0.0 }));
    let w = DenseMatrix::from_fn(9, 3, |i, j| 1.0 / (i + 2 * j + 1) as f64 - 0.2);
    let x = w.matmul_t(&h);
    let res = solve_proposed(&x, 3, &SolverOptions::default()).unwrap();
    assert!(res.residuals.min_h >= -1e-9);
    assert!(res.residuals.colsum <= 1e-8);
    assert!(res.residuals.reconstruction <= 1e-8);
}

#[test]
fn rank_mismatch_is_an_error() {
    let x = DenseMatrix::from_fn(6, 6, |i, j| ((i + 1) * (j + 1)) as f64);
    assert!(matches!(solve_proposed(&x, 2, &SolverOptions::default()), Err(Error::ResidualAboveTolerance { .. }) | Err(Error::RankDeficient { .. })));
}

#[test]
fn warm_start_matches_cold_start_result() {
    let inst = generate(&GenSpec { m: 30, n: 30, r: 3, seed: 2, ..Default::default() }).unwrap();
    let opts = SolverOptions::default();
    let model = svd_reduce(&inst.x, 3, opts.rank_tol).unwrap();
    let cold = solve_proposed(&inst.x, 3, &opts).unwrap();
    let warm = solve_reduced(&inst.x, &model, init_q(&model, &opts).unwrap(), &opts).unwrap();
    assert_eq!(cold, warm);
}

use nmfid::geometry::{
    check_sufficiently_scattered, dual_cone_extreme_rays, refute_by_sampling, sample_feasible_transform, ScatterStatus,
};
use nmfid::numerics::{determinant, numerical_rank, DenseMatrix};
use nmfid::par::Exec;
use nmfid::rng::rng_from;
use nmfid_oracles::{dual_cone_rays_bruteforce, same_ray_sets, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn nested(m: &DenseMatrix) -> Mat {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn perms(base: [f64; 3]) -> DenseMatrix {
    let idx = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    DenseMatrix::from_fn(6, 3, |i, j| base[idx[i][j]])
}

/// Random nonnegative full-rank H with some exact zeros.
fn random_h(rng: &mut ChaCha8Rng) -> DenseMatrix {
    loop {
        let r = rng.random_range(2..=4);
        let n = rng.random_range(r..=12);
        let h = DenseMatrix::from_fn(n, r, |_, _| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.0) });
        if numerical_rank(&h, 1e-8) == r {
            return h;
        }
    }
}

#[test]
fn double_description_matches_active_set_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..150 {
        let h = random_h(&mut rng);
        let dd = dual_cone_extreme_rays(&h, 1e-10).unwrap();
        let brute = dual_cone_rays_bruteforce(&nested(&h), 1e-10);
        assert!(same_ray_sets(&dd.rays, &brute, 1e-8), "case {case}: {} vs {} rays\n{h:?}", dd.len(), brute.len());
        for (y, active) in dd.rays.iter().zip(&dd.active_sets) {
            for i in 0..h.rows() {
                let v: f64 = h.row(i).iter().zip(y).map(|(a, b)| a * b).sum();
                assert!(v >= -1e-10);
            }
            let sub = h.select_rows(active);
            assert_eq!(numerical_rank(&sub, 1e-9), h.cols() - 1, "case {case}");
        }
    }
}

#[test]
fn three_one_zero_rays() {
    let h = perms([3.0, 1.0, 0.0]);
    let dd = dual_cone_extreme_rays(&h, 1e-9).unwrap();
    let s19 = 19f64.sqrt();
    let expected: Mat = vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![-1.0 / s19, 3.0 / s19, 3.0 / s19],
        vec![3.0 / s19, -1.0 / s19, 3.0 / s19],
        vec![3.0 / s19, 3.0 / s19, -1.0 / s19],
    ];
    assert!(same_ray_sets(&dd.rays, &expected, 1e-12), "{:?}", dd.rays);
    assert!(same_ray_sets(&dual_cone_rays_bruteforce(&nested(&h), 1e-12), &expected, 1e-12));
}

#[test]
fn exact_yes_is_never_refuted_by_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut yes = 0;
    for case in 0..400 {
        let h = random_h(&mut rng);
        if check_sufficiently_scattered(&h, 1e-9).unwrap().sufficiently_scattered != ScatterStatus::Yes {
            continue;
        }
        yes += 1;
        for seed in 0..3 {
            let v = refute_by_sampling(&h, 200, seed, Exec::Parallel).unwrap();
            assert_ne!(v.sufficiently_scattered, ScatterStatus::No, "case {case}, seed {seed}");
        }
    }
    assert!(yes >= 5, "only {yes} certified instances");
}

#[test]
fn hadamard_chain_on_certified_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut checked: usize = 0;
    while checked < 10 {
        let h = random_h(&mut rng);
        if check_sufficiently_scattered(&h, 1e-9).unwrap().sufficiently_scattered != ScatterStatus::Yes {
            continue;
        }
        checked += 1;
        let r = h.cols();
        let rays = dual_cone_extreme_rays(&h, 1e-9).unwrap();
        let mut srng = rng_from(&[checked.into(), "hadamard".into()]);
        for _ in 0..500 {
            let a = sample_feasible_transform(&rays, r, &mut srng);
            // Feasibility: H A ≥ 0 and 1ᵀA = 1ᵀ.
            assert!(h.matmul(&a).min_entry() >= -1e-12);
            let d = determinant(&a).abs();
            assert!(d <= 1.0 + 1e-9, "|det A| = {d}");
            if d > 1.0 - 1e-6 {
                for j in 0..r {
                    let col = a.col(j);
                    assert_eq!(col.iter().filter(|v| (**v - 1.0).abs() < 1e-6).count(), 1);
                }
            }
        }
    }
}

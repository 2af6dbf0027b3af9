use nmfid::linprog::{solve_lp, LinearProgram, LpStatus, DEFAULT_FEAS_TOL};
use nmfid::numerics::DenseMatrix;
use nmfid_oracles::{lp_vertex_enumeration, BoxLp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random bounded LP with ≤ 6 variables and ≤ 10 inequality rows; some carry
/// one equality row.
pub fn random_box_lp(rng: &mut ChaCha8Rng) -> (LinearProgram, BoxLp) {
    let n = rng.random_range(1..=6);
    let k = rng.random_range(0..=10);
    let n_eq = if n > 1 && rng.random_bool(0.3) { 1 } else { 0 };
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let b: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..0.5)).collect();
    let e: Vec<Vec<f64>> = (0..n_eq).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let f: Vec<f64> = (0..n_eq).map(|_| rng.random_range(-0.5..0.5)).collect();
    let lo: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..0.0)).collect();
    let hi: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    let mut lp = LinearProgram::new(c.clone())
        .with_bounds(lo.iter().zip(&hi).map(|(l, h)| (Some(*l), Some(*h))).collect());
    if k > 0 {
        lp = lp.with_ineq(DenseMatrix::from_rows(&a).unwrap(), b.clone());
    }
    if n_eq > 0 {
        lp = lp.with_eq(DenseMatrix::from_rows(&e).unwrap(), f.clone());
    }
    (lp, BoxLp { c, a, b, e, f, lo, hi })
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut optimal, mut infeasible) = (0, 0);
    for case in 0..300 {
        let (lp, oracle_lp) = random_box_lp(&mut rng);
        let out = solve_lp(&lp, DEFAULT_FEAS_TOL).unwrap();
        match lp_vertex_enumeration(&oracle_lp, 1e-9) {
            Some(best) => {
                assert_eq!(out.status, LpStatus::Optimal, "case {case}");
                assert!((out.value - best).abs() <= 1e-7, "case {case}: {} vs {best}", out.value);
                assert!(lp.max_violation(&out.x) <= 1e-9);
                optimal += 1;
            }
            None => {
                assert_eq!(out.status, LpStatus::Infeasible, "case {case}");
                infeasible += 1;
            }
        }
    }
    assert!(optimal > 100 && infeasible > 0, "{optimal} optimal, {infeasible} infeasible");
}

#[test]
fn tall_lps_match_vertex_enumeration_through_dual_route() {
    // Many rows, few variables: solved through the dual internally.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..40 {
        let n = rng.random_range(2..=3);
        let k = rng.random_range(12..=16);
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..-0.1)).collect();
        let lp = LinearProgram::new(c.clone())
            .with_ineq(DenseMatrix::from_rows(&a).unwrap(), b.clone())
            .with_box(-3.0, 3.0);
        let oracle = BoxLp { c, a, b, e: vec![], f: vec![], lo: vec![-3.0; n], hi: vec![3.0; n] };
        let best = lp_vertex_enumeration(&oracle, 1e-9).expect("origin is feasible");
        let out = solve_lp(&lp, DEFAULT_FEAS_TOL).unwrap();
        assert!((out.value - best).abs() <= 1e-7, "case {case}: {} vs {best}", out.value);
    }
}

#[test]
fn no_sampled_feasible_point_beats_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let (lp, oracle) = random_box_lp(&mut rng);
        let out = solve_lp(&lp, DEFAULT_FEAS_TOL).unwrap();
        if out.status != LpStatus::Optimal || lp.eq.rows() > 0 {
            continue;
        }
        for _ in 0..500 {
            let x: Vec<f64> = oracle.lo.iter().zip(&oracle.hi).map(|(l, h)| rng.random_range(*l..*h)).collect();
            if lp.max_violation(&x) <= 0.0 {
                let v: f64 = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
                assert!(v <= out.value + 1e-7);
            }
        }
    }
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let (lp, _) = random_box_lp(&mut rng);
        assert_eq!(solve_lp(&lp, DEFAULT_FEAS_TOL).unwrap(), solve_lp(&lp, DEFAULT_FEAS_TOL).unwrap());
    }
}

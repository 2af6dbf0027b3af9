use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nmfid::synthlab::{mse, Case};
use nmfid::DenseMatrix;
use nmfid_cli::bench::{results_csv, run_bench, BenchConfig, Method};
use nmfid_cli::io::{matrix_to_csv, read_matrix, write_matrix};
use proptest::prelude::*;

fn nmfid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmfid")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_csv(dir: &Path, name: &str, rows: &[Vec<f64>]) -> PathBuf {
    let p = dir.join(name);
    write_matrix(&p, &DenseMatrix::from_rows(rows).unwrap()).unwrap();
    p
}

#[test]
fn gen_writes_bundle_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = nmfid(&["gen", "--case", "sparse-w", "--m", "200", "--n", "200", "--rank", "5", "--sparsity", "0.35", "--seed", "1", "--out", path(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["X.csv", "W.csv", "H.csv", "meta.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let h = read_matrix(&a.join("H.csv")).unwrap();
    assert_eq!(h.shape(), (200, 5));
    assert_eq!(h.as_slice().iter().filter(|v| **v == 0.0).count(), 350);
    let text = fs::read_to_string(a.join("X.csv")).unwrap();
    assert!(!text.contains('\r'));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["case"], "sparse-w");
    assert_eq!(meta["r"], 5);
}

#[test]
fn gen_rejects_bad_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    for args in [
        vec!["gen", "--rank", "0", "--out", path(&out)],
        vec!["gen", "--case", "nope", "--out", path(&out)],
        vec!["gen", "--certify", "sampling:0", "--out", path(&out)],
        vec!["gen", "--sparsity", "1.5", "--out", path(&out)],
    ] {
        let o = nmfid(&args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn gen_reports_exhausted_certification_budget() {
    let tmp = tempfile::tempdir().unwrap();
    // Strictly positive rows never reach the orthant faces that C touches.
    let o = nmfid(&["gen", "--m", "3", "--n", "3", "--rank", "3", "--sparsity", "0.0", "--certify", "exact", "--out", path(&tmp.path().join("c"))]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn solve_proposed_on_constructed_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("two");
    fs::create_dir_all(&dir).unwrap();
    let w = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let raw = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0]]).unwrap();
    let s = raw.col_sums();
    let h = raw.scale_cols(&s.iter().map(|v| 1.0 / v).collect::<Vec<_>>());
    write_matrix(&dir.join("X.csv"), &w.matmul_t(&h)).unwrap();
    write_matrix(&dir.join("H.csv"), &h).unwrap();
    let out = tmp.path().join("res").join("result.json");
    let o = nmfid(&["solve", "--method", "proposed", "--input", path(&dir), "--rank", "2", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report["mse"].as_f64().unwrap() < 1e-10);
    assert_eq!(report["method"], "proposed");
    let h_est = read_matrix(&out.with_file_name("result_H.csv")).unwrap();
    assert!(mse(&h_est, &h).unwrap() < 1e-10);
    assert_eq!(read_matrix(&out.with_file_name("result_W.csv")).unwrap().shape(), (3, 2));
}

#[test]
fn solve_baselines_on_gaussian_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("g");
    let o = nmfid(&["gen", "--case", "gaussian-w", "--m", "60", "--n", "60", "--rank", "3", "--seed", "4", "--out", path(&dir)]);
    assert_eq!(code(&o), 0);
    let out = tmp.path().join("plain.json");
    let o = nmfid(&["solve", "--method", "plain", "--input", path(&dir), "--rank", "3", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let flags: Vec<&str> = report["flags"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(flags.contains(&"clipped_input"), "{flags:?}");

    let out = tmp.path().join("volmin.json");
    let o = nmfid(&["solve", "--method", "volmin", "--input", path(&dir), "--rank", "3", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report["mse"].as_f64().is_some());
}

#[test]
fn solve_errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let x = write_csv(tmp.path(), "X.csv", &[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![1.0, 0.0, 1.0]]);
    let out = tmp.path().join("r.json");
    assert_eq!(code(&nmfid(&["solve", "--method", "proposed", "--input", path(&x), "--rank", "0", "--out", path(&out)])), 2);
    assert_eq!(code(&nmfid(&["solve", "--method", "proposed", "--input", path(&x), "--rank", "9", "--out", path(&out)])), 2);
    // Rank 3 requested from rank-2 data.
    assert_eq!(code(&nmfid(&["solve", "--method", "proposed", "--input", path(&x), "--rank", "3", "--out", path(&out)])), 4);
    assert_eq!(code(&nmfid(&["solve", "--method", "regularized", "--input", path(&x), "--rank", "2", "--out", path(&out)])), 2);
    assert_eq!(code(&nmfid(&["solve", "--method", "proposed", "--input", path(&tmp.path().join("missing.csv")), "--rank", "2", "--out", path(&out)])), 2);
}

#[test]
fn check_verdicts_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let eye = write_csv(tmp.path(), "eye.csv", &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
    let o = nmfid(&["check", "--h", path(&eye), "--exact"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("sufficiently scattered: Yes"));

    let two = write_csv(tmp.path(), "two.csv", &[vec![2.0, 1.0], vec![1.0, 2.0]]);
    let report = tmp.path().join("two.json");
    let o = nmfid(&["check", "--h", path(&two), "--exact", "--out", path(&report)]);
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).contains("sufficiently scattered: No"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["sufficiently_scattered"], "No");
    assert!(v["certificate"].get("RayOutsideCStar").is_some(), "{v}");

    let idx = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let rows: Vec<Vec<f64>> = idx.iter().map(|p| p.iter().map(|&k| [3.0, 1.0, 0.0][k]).collect()).collect();
    let p310 = write_csv(tmp.path(), "p310.csv", &rows);
    let o = nmfid(&["check", "--h", path(&p310)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("separable: false"));
    assert!(stdout(&o).contains("sufficiently scattered: Yes"));

    let rows: Vec<Vec<f64>> = idx.iter().map(|p| p.iter().map(|&k| [2.0, 1.0, 0.0][k]).collect()).collect();
    let p210 = write_csv(tmp.path(), "p210.csv", &rows);
    assert_eq!(code(&nmfid(&["check", "--h", path(&p210)])), 5);
    assert_eq!(code(&nmfid(&["check", "--h", path(&two), "--samples", "500", "--seed", "3"])), 5);
    assert_eq!(code(&nmfid(&["check", "--h", path(&p210), "--exact", "--samples", "5"])), 2);
}

#[test]
fn mse_command() {
    let tmp = tempfile::tempdir().unwrap();
    let href = write_csv(tmp.path(), "ref.csv", &[vec![1.0, 0.0], vec![0.0, 1.0]]);
    let hest = write_csv(tmp.path(), "est.csv", &[vec![1.0, 0.0], vec![1.0, 1.0]]);
    let o = nmfid(&["mse", "--est", path(&hest), "--ref", path(&href)]);
    assert_eq!(code(&o), 0);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - (2.0 - 2f64.sqrt()) / 2.0).abs() < 1e-15);
    assert_eq!(stdout(&nmfid(&["mse", "--est", path(&href), "--ref", path(&href)])).trim(), format!("{:.16e}", 0.0));

    let swapped = write_csv(tmp.path(), "swapped.csv", &[vec![0.0, 3.0], vec![2.0, 0.0]]);
    let o = nmfid(&["mse", "--est", path(&swapped), "--ref", path(&href)]);
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.0);

    let wide = write_csv(tmp.path(), "wide.csv", &[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]]);
    assert_eq!(code(&nmfid(&["mse", "--est", path(&wide), "--ref", path(&href)])), 2);
}

#[test]
fn bench_writes_sorted_reproducible_results() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = tmp.path().join(name);
        let o = nmfid(&[
            "bench", "--cases", "dense-w,sparse-w", "--ranks", "3", "--methods", "plain,proposed", "--m", "30", "--n", "30", "--trials", "2",
            "--seed", "5", "--threads", threads, "--out", path(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a", "1");
    let b = run("b", "3");
    let ra = fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(ra, fs::read_to_string(b.join("results.csv")).unwrap());
    let lines: Vec<&str> = ra.lines().collect();
    assert_eq!(lines[0], "method,case,r,trial,seed,mse,fit_residual,runtime_ms,converged,flags");
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[1].starts_with("proposed,sparse-w,3,0,"));
    assert!(lines[8].starts_with("plain,dense-w,3,1,"));
    assert!(lines[1..].iter().all(|l| l.split(',').nth(7) == Some("0.000")));
    let summary = fs::read_to_string(a.join("summary.md")).unwrap();
    assert!(summary.contains("| proposed | 3 |"));
    assert!(a.join("timings.csv").exists());
}

#[test]
fn bench_seeds_are_per_coordinate() {
    let config = BenchConfig { cases: vec![Case::DenseW], ranks: vec![3], m: 20, n: 20, trials: 3, methods: vec![Method::Plain], ..Default::default() };
    let full = run_bench(&config, 1).unwrap();
    let single = run_bench(&BenchConfig { trials: 2, ..config }, 1).unwrap();
    assert_eq!(results_csv(&full[..2], false).unwrap(), results_csv(&single, false).unwrap());
    let seeds: std::collections::BTreeSet<u64> = full.iter().map(|o| o.record.seed).collect();
    assert_eq!(seeds.len(), 3);
}

#[test]
fn bench_rejects_empty_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(code(&nmfid(&["bench", "--trials", "0", "--out", path(&out)])), 2);
    assert_eq!(code(&nmfid(&["bench", "--methods", "bogus", "--out", path(&out)])), 2);
    assert_eq!(code(&nmfid(&["bench", "--threads", "0", "--trials", "1", "--ranks", "2", "--m", "10", "--n", "10", "--out", path(&out)])), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn csv_round_trips_bitwise(
        cols in 1usize..5,
        data in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..6),
    ) {
        let values: Vec<f64> = data.iter().cycle().take(data.len() * cols).cloned().collect();
        let a = DenseMatrix::from_vec(data.len(), cols, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_matrix(&p, &a).unwrap();
        let b = read_matrix(&p).unwrap();
        prop_assert_eq!(a.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(matrix_to_csv(&a), matrix_to_csv(&b));
    }
}

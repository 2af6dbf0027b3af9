//! Argument parsing and the five subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nmfid::baselines::{solve_plain_nmf, solve_regularized, solve_volmin_mves, BaselineOptions};
use nmfid::geometry::{check_sufficiently_scattered, refute_by_sampling, Certificate, ScatterStatus, ScatterVerdict, DEFAULT_CONE_TOL};
use nmfid::numerics::gram_det;
use nmfid::par::Exec;
use nmfid::solver::{solve_proposed, Flag, Residuals, SolverOptions, SolverResult};
use nmfid::synthlab::{generate, mse, Case, GenSpec};
use serde::Serialize;

use crate::bench::{cell_stats, results_csv, run_bench, summary_md, timings_csv, BenchConfig, Method};
use crate::io::{parse_certify, read_input, read_matrix, side_file, write_bundle, write_json, write_matrix};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "nmfid", version, about = "Identifiable NMF: generation, solvers, certificates and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic instance and write it as a bundle directory.
    Gen(GenArgs),
    /// Factor a matrix with one of the methods.
    Solve(SolveArgs),
    /// Check separability and the sufficiently scattered condition of H.
    Check(CheckArgs),
    /// Permutation-matched MSE between two factor estimates.
    Mse(MseArgs),
    /// Run the synthetic benchmark.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value = "sparse-w")]
    pub case: Case,
    #[arg(long, default_value_t = 200)]
    pub m: usize,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.35)]
    pub sparsity: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// none, sampling:K or exact.
    #[arg(long, default_value = "none")]
    pub certify: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Bundle directory or a bare X.csv.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub rank: usize,
    /// Relative stopping tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Penalty weight of the regularized method. Without it the weight is
    /// 1e-3·‖X‖²/r/det(WᵀW) of the bundle's ground truth.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub h: PathBuf,
    /// Enumerate dual-cone extreme rays (the default).
    #[arg(long, conflicts_with = "samples")]
    pub exact: bool,
    /// Look for a refutation among this many sampled boundary points.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_CONE_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MseArgs {
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON config; flags given here override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub cases: Option<Vec<Case>>,
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_enum)]
    pub methods: Option<Vec<Method>>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub sparsity: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write measured runtimes into results.csv (which then differs run to run).
    #[arg(long)]
    pub record_runtime: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Mse(a) => cmd_mse(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<i32, CliError> {
    let spec = GenSpec {
        m: a.m,
        n: a.n,
        r: a.rank,
        case: a.case,
        sparsity: a.sparsity,
        rho: a.rho,
        seed: a.seed,
        certify: parse_certify(&a.certify)?,
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let inst = generate(&spec).map_err(CliError::from_core)?;
    write_bundle(&a.out, &inst)?;
    println!("wrote {} ({}x{}, r = {}, {} draw(s))", a.out.display(), a.m, a.n, a.rank, inst.attempts);
    if let Some(v) = &inst.scatter_report {
        println!("H: separable {}, sufficiently scattered {:?}", v.separable, v.sufficiently_scattered);
    }
    if let Some(v) = &inst.w_scatter_report {
        println!("W: separable {}, sufficiently scattered {:?}", v.separable, v.sufficiently_scattered);
    }
    Ok(0)
}

#[derive(Serialize)]
struct SolveReport<'a> {
    method: Method,
    rank: usize,
    options: serde_json::Value,
    w_file: String,
    h_file: String,
    objective_trace: &'a [f64],
    sweeps: usize,
    converged: bool,
    residuals: Residuals,
    flags: &'a [Flag],
    runtime_ms: f64,
    mse: Option<f64>,
}

pub fn cmd_solve(a: &SolveArgs) -> Result<i32, CliError> {
    if a.rank == 0 {
        return Err(CliError::Usage("--rank must be at least 1".into()));
    }
    let input = read_input(&a.input)?;
    let start = Instant::now();
    let (res, options): (nmfid::Result<SolverResult>, serde_json::Value) = match a.method {
        Method::Proposed => {
            let mut o = SolverOptions { seed: a.seed, rho: a.rho, ..Default::default() };
            if let Some(t) = a.tol {
                o.rel_tol = t;
            }
            if let Some(s) = a.max_sweeps {
                o.max_sweeps = s;
            }
            (solve_proposed(&input.x, a.rank, &o), to_value(&o)?)
        }
        method => {
            let mut o = BaselineOptions { seed: a.seed, rho: a.rho, clip_negative_input: method == Method::Plain, ..Default::default() };
            if let Some(t) = a.tol {
                o.rel_tol = t;
            }
            if let Some(s) = a.max_sweeps {
                o.max_iters = s;
            }
            let res = match method {
                Method::Volmin => solve_volmin_mves(&input.x, a.rank, &o),
                Method::Plain => solve_plain_nmf(&input.x, a.rank, &o),
                _ => {
                    o.lambda = match (a.lambda, &input.w_true) {
                        (Some(l), _) => l,
                        (None, Some(w)) if w.cols() == a.rank => {
                            1e-3 * input.x.frobenius_norm().powi(2) / a.rank as f64 / gram_det(w)
                        }
                        _ => return Err(CliError::Usage("the regularized method needs --lambda when the input has no ground truth W of this rank".into())),
                    };
                    solve_regularized(&input.x, a.rank, &o)
                }
            };
            (res, to_value(&o)?)
        }
    };
    let res = res.map_err(CliError::from_core)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let mse_value = match &input.h_true {
        Some(h) if h.shape() == res.h.shape() => Some(mse(&res.h, h).map_err(CliError::from_core)?),
        _ => None,
    };
    let (w_path, h_path) = (side_file(&a.out, "W"), side_file(&a.out, "H"));
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    write_matrix(&w_path, &res.w)?;
    write_matrix(&h_path, &res.h)?;
    let report = SolveReport {
        method: a.method,
        rank: a.rank,
        options,
        w_file: file_name(&w_path),
        h_file: file_name(&h_path),
        objective_trace: &res.objective_trace,
        sweeps: res.sweeps,
        converged: res.converged,
        residuals: res.residuals,
        flags: &res.flags,
        runtime_ms,
        mse: mse_value,
    };
    write_json(&a.out, &report)?;
    let flags: Vec<&str> = res.flags.iter().map(|f| f.as_str()).collect();
    println!(
        "{}: {} sweeps, converged {}, residual {:.3e}, flags [{}]",
        a.method,
        res.sweeps,
        res.converged,
        res.residuals.reconstruction,
        flags.join(", ")
    );
    if let Some(v) = mse_value {
        println!("mse {v:.16e}");
    }
    Ok(0)
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Input(e.to_string()))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn cmd_check(a: &CheckArgs) -> Result<i32, CliError> {
    let h = read_matrix(&a.h)?;
    let verdict: ScatterVerdict = match a.samples {
        Some(0) => return Err(CliError::Usage("--samples must be at least 1".into())),
        Some(k) => refute_by_sampling(&h, k, a.seed, Exec::Sequential),
        None => check_sufficiently_scattered(&h, a.tol),
    }
    .map_err(CliError::from_core)?;
    println!("separable: {}", verdict.separable);
    let witnesses: Vec<String> = verdict.witnesses.iter().map(|w| w.map_or("-".into(), |i| i.to_string())).collect();
    println!("witness rows: {}", witnesses.join(" "));
    println!("sufficiently scattered: {:?}", verdict.sufficiently_scattered);
    match &verdict.certificate {
        Certificate::None => {}
        Certificate::Rays(rays) => println!("certificate: {} dual-cone extreme rays, all inside C*", rays.len()),
        Certificate::RayOutsideCStar(ray) => println!("certificate: ray {:?} outside C* (margin {:.3e})", ray.ray, ray.margin),
        Certificate::NonCoordinateBoundaryRay(ray) => println!("certificate: non-coordinate ray {:?} on the boundary of C*", ray.ray),
        Certificate::PointOutsideCone(p) => println!("certificate: point {p:?} of C outside cone(Hᵀ)"),
    }
    if let Some(out) = &a.out {
        write_json(out, &verdict)?;
    }
    Ok(if verdict.sufficiently_scattered == ScatterStatus::No { 5 } else { 0 })
}

pub fn cmd_mse(a: &MseArgs) -> Result<i32, CliError> {
    let est = read_matrix(&a.est)?;
    let reference = read_matrix(&a.reference)?;
    let v = mse(&est, &reference).map_err(CliError::from_core)?;
    println!("{v:.16e}");
    Ok(0)
}

pub fn bench_config(a: &BenchArgs) -> Result<BenchConfig, CliError> {
    let mut c = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => BenchConfig::default(),
    };
    if let Some(v) = &a.cases {
        c.cases = v.clone();
    }
    if let Some(v) = &a.ranks {
        c.ranks = v.clone();
    }
    if let Some(v) = &a.methods {
        c.methods = v.clone();
    }
    c.m = a.m.unwrap_or(c.m);
    c.n = a.n.unwrap_or(c.n);
    c.sparsity = a.sparsity.unwrap_or(c.sparsity);
    c.trials = a.trials.unwrap_or(c.trials);
    c.seed = a.seed.unwrap_or(c.seed);
    c.validate()?;
    Ok(c)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32, CliError> {
    let config = bench_config(a)?;
    let threads = match a.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let outcomes = run_bench(&config, threads)?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let write = |name: &str, text: String| {
        let p = a.out.join(name);
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    };
    write("results.csv", results_csv(&outcomes, a.record_runtime)?)?;
    write("timings.csv", timings_csv(&outcomes))?;
    let summary = summary_md(&config, &outcomes);
    write("summary.md", summary.clone())?;
    print!("{summary}");
    for o in outcomes.iter().filter(|o| o.error.is_some()) {
        let t = &o.record;
        eprintln!("{} {} r={} trial {}: {}", t.method, t.case, t.r, t.trial, o.error.as_deref().unwrap_or_default());
    }
    if let Some(((m, r, c), _)) = cell_stats(&outcomes).into_iter().find(|(_, st)| st.succeeded == 0) {
        return Err(CliError::EmptyCell(format!("{m} r={r} {c}")));
    }
    Ok(0)
}

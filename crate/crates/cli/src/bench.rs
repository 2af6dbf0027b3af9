//! The synthetic benchmark: methods × cases × ranks × trials.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use clap::ValueEnum;
use nmfid::baselines::{solve_plain_nmf, solve_regularized, solve_volmin_mves, BaselineOptions};
use nmfid::numerics::gram_det;
use nmfid::rng::derive_seed;
use nmfid::solver::{solve_proposed, Flag, SolverOptions, SolverResult};
use nmfid::synthlab::{generate, mse, Case, GenSpec, Instance};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Proposed,
    Volmin,
    Plain,
    Regularized,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Proposed, Method::Volmin, Method::Plain, Method::Regularized];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Volmin => "volmin",
            Method::Plain => "plain",
            Method::Regularized => "regularized",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown method '{s}' (expected proposed, volmin, plain or regularized)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub cases: Vec<Case>,
    pub ranks: Vec<usize>,
    pub m: usize,
    pub n: usize,
    pub sparsity: f64,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub proposed: SolverOptions,
    pub volmin: BaselineOptions,
    pub plain: BaselineOptions,
    pub regularized: BaselineOptions,
    /// When `regularized.lambda` is zero, the penalty weight is this times
    /// `‖X‖²/r / det(W_trueᵀW_true)`.
    pub regularized_lambda_rel: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            cases: Case::ALL.to_vec(),
            ranks: vec![5, 10],
            m: 200,
            n: 200,
            sparsity: 0.35,
            trials: 10,
            seed: 0,
            methods: Method::ALL.to_vec(),
            proposed: SolverOptions::default(),
            volmin: BaselineOptions::default(),
            plain: BaselineOptions { clip_negative_input: true, ..Default::default() },
            regularized: BaselineOptions::default(),
            regularized_lambda_rel: 1e-3,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Usage("trials must be at least 1".into()));
        }
        if self.cases.is_empty() || self.methods.is_empty() || self.ranks.is_empty() {
            return Err(CliError::Usage("cases, methods and ranks must be non-empty".into()));
        }
        for &r in &self.ranks {
            GenSpec { m: self.m, n: self.n, r, sparsity: self.sparsity, ..Default::default() }.validate().map_err(CliError::from_core)?;
        }
        Ok(())
    }

    /// Every trial coordinate in output order.
    pub fn jobs(&self) -> Vec<Job> {
        let mut methods = self.methods.clone();
        methods.sort();
        methods.dedup();
        let mut cases = self.cases.clone();
        cases.sort();
        cases.dedup();
        let mut ranks = self.ranks.clone();
        ranks.sort();
        ranks.dedup();
        let mut jobs = Vec::new();
        for &method in &methods {
            for &case in &cases {
                for &r in &ranks {
                    for trial in 0..self.trials {
                        jobs.push(Job { method, case, r, trial });
                    }
                }
            }
        }
        jobs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Job {
    pub method: Method,
    pub case: Case,
    pub r: usize,
    pub trial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    pub case: Case,
    pub r: usize,
    pub trial: usize,
    pub seed: u64,
    /// Infinite when the trial failed.
    pub mse: f64,
    pub fit_residual: f64,
    pub runtime_ms: f64,
    pub converged: bool,
    pub flags: Vec<Flag>,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.flags.contains(&Flag::Failed)
    }
}

/// A record plus what the CSV leaves out.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub objective_trace: Vec<f64>,
    pub error: Option<String>,
}

/// Seed of the instance shared by all methods at one coordinate.
pub fn instance_seed(seed: u64, case: Case, r: usize, trial: usize) -> u64 {
    derive_seed(&[seed.into(), "instance".into(), case.as_str().into(), r.into(), trial.into()])
}

/// Seed of one method's run at one coordinate.
pub fn trial_seed(seed: u64, case: Case, r: usize, method: Method, trial: usize) -> u64 {
    derive_seed(&[seed.into(), case.as_str().into(), r.into(), method.as_str().into(), trial.into()])
}

pub fn instance_for(config: &BenchConfig, case: Case, r: usize, trial: usize) -> nmfid::Result<Instance> {
    generate(&GenSpec {
        m: config.m,
        n: config.n,
        r,
        case,
        sparsity: config.sparsity,
        seed: instance_seed(config.seed, case, r, trial),
        ..Default::default()
    })
}

pub fn solve_method(method: Method, inst: &Instance, r: usize, seed: u64, config: &BenchConfig) -> nmfid::Result<SolverResult> {
    match method {
        Method::Proposed => solve_proposed(&inst.x, r, &SolverOptions { seed, ..config.proposed.clone() }),
        Method::Volmin => solve_volmin_mves(&inst.x, r, &BaselineOptions { seed, ..config.volmin.clone() }),
        Method::Plain => solve_plain_nmf(&inst.x, r, &BaselineOptions { seed, ..config.plain.clone() }),
        Method::Regularized => {
            let mut opts = BaselineOptions { seed, ..config.regularized.clone() };
            if opts.lambda == 0.0 {
                opts.lambda = config.regularized_lambda_rel * inst.x.frobenius_norm().powi(2) / r as f64 / gram_det(&inst.w_true);
            }
            solve_regularized(&inst.x, r, &opts)
        }
    }
}

pub fn run_job(config: &BenchConfig, job: Job) -> TrialOutcome {
    let Job { method, case, r, trial } = job;
    let seed = trial_seed(config.seed, case, r, method, trial);
    let start = Instant::now();
    let solved = instance_for(config, case, r, trial).and_then(|inst| {
        let res = solve_method(method, &inst, r, seed, config)?;
        let err = mse(&res.h, &inst.h_true)?;
        Ok((res, err))
    });
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let record = |mse, fit_residual, converged, flags| TrialRecord { method, case, r, trial, seed, mse, fit_residual, runtime_ms, converged, flags };
    match solved {
        Ok((res, err)) => {
            let mut flags = res.flags.clone();
            flags.sort();
            TrialOutcome {
                record: record(err, res.residuals.reconstruction, res.converged, flags),
                objective_trace: res.objective_trace,
                error: None,
            }
        }
        Err(e) => TrialOutcome {
            record: record(f64::INFINITY, f64::INFINITY, false, vec![Flag::Failed]),
            objective_trace: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Runs every job on a pool of `threads` workers; the result is sorted by
/// coordinate and independent of the worker count.
pub fn run_bench(config: &BenchConfig, threads: usize) -> Result<Vec<TrialOutcome>, CliError> {
    config.validate()?;
    let jobs = config.jobs();
    let mut out = run_jobs(config, &jobs, threads.max(1))?;
    out.sort_by_key(|o| Job { method: o.record.method, case: o.record.case, r: o.record.r, trial: o.record.trial });
    Ok(out)
}

#[cfg(feature = "parallel")]
fn run_jobs(config: &BenchConfig, jobs: &[Job], threads: usize) -> Result<Vec<TrialOutcome>, CliError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(|&j| run_job(config, j)).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_jobs(config: &BenchConfig, jobs: &[Job], _threads: usize) -> Result<Vec<TrialOutcome>, CliError> {
    Ok(jobs.iter().map(|&j| run_job(config, j)).collect())
}

/// `results.csv`. Runtimes are written as 0 unless `record_runtime`, so the
/// file is reproducible byte for byte.
pub fn results_csv(outcomes: &[TrialOutcome], record_runtime: bool) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let header = ["method", "case", "r", "trial", "seed", "mse", "fit_residual", "runtime_ms", "converged", "flags"];
    w.write_record(header).map_err(|e| CliError::Input(e.to_string()))?;
    for o in outcomes {
        let t = &o.record;
        let runtime = if record_runtime { t.runtime_ms } else { 0.0 };
        let flags: Vec<&str> = t.flags.iter().map(|f| f.as_str()).collect();
        w.write_record([
            t.method.to_string(),
            t.case.to_string(),
            t.r.to_string(),
            t.trial.to_string(),
            t.seed.to_string(),
            format!("{:.16e}", t.mse),
            format!("{:.16e}", t.fit_residual),
            format!("{runtime:.3}"),
            t.converged.to_string(),
            flags.join(";"),
        ])
        .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
}

/// Per-trial wall times, kept apart from `results.csv`.
pub fn timings_csv(outcomes: &[TrialOutcome]) -> String {
    let mut s = String::from("method,case,r,trial,runtime_ms\n");
    for o in outcomes {
        let t = &o.record;
        let _ = writeln!(s, "{},{},{},{},{:.3}", t.method, t.case, t.r, t.trial, t.runtime_ms);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub succeeded: usize,
    pub failed: usize,
}

/// MSE statistics over the successful trials of each (method, r, case).
pub fn cell_stats(outcomes: &[TrialOutcome]) -> BTreeMap<(Method, usize, Case), CellStats> {
    let mut cells: BTreeMap<(Method, usize, Case), (Vec<f64>, usize)> = BTreeMap::new();
    for o in outcomes {
        let t = &o.record;
        let cell = cells.entry((t.method, t.r, t.case)).or_default();
        if t.failed() {
            cell.1 += 1;
        } else {
            cell.0.push(t.mse);
        }
    }
    cells
        .into_iter()
        .map(|(key, (mut v, failed))| {
            v.sort_by(f64::total_cmp);
            let k = v.len();
            let stats = if k == 0 {
                CellStats { mean: f64::NAN, median: f64::NAN, max: f64::NAN, succeeded: 0, failed }
            } else {
                let median = if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) };
                CellStats { mean: v.iter().sum::<f64>() / k as f64, median, max: v[k - 1], succeeded: k, failed }
            };
            (key, stats)
        })
        .collect()
}

/// Markdown table: one row per method and rank, per case the mean, median
/// and max MSE.
pub fn summary_md(config: &BenchConfig, outcomes: &[TrialOutcome]) -> String {
    let stats = cell_stats(outcomes);
    let mut cases = config.cases.clone();
    cases.sort();
    cases.dedup();
    let mut s = String::new();
    let _ = writeln!(s, "# MSE of the estimated H\n");
    let _ = writeln!(s, "M = {}, N = {}, {} trials per cell, seed {}.\n", config.m, config.n, config.trials, config.seed);
    let mut head = String::from("| method | r |");
    let mut rule = String::from("|---|---|");
    for c in &cases {
        let _ = write!(head, " {c} mean | {c} median | {c} max |");
        rule.push_str("---:|---:|---:|");
    }
    let _ = writeln!(s, "{head}\n{rule}");
    let mut rows: Vec<(Method, usize)> = stats.keys().map(|&(m, r, _)| (m, r)).collect();
    rows.dedup();
    for (m, r) in rows {
        let mut line = format!("| {m} | {r} |");
        for &c in &cases {
            match stats.get(&(m, r, c)) {
                Some(st) if st.succeeded > 0 => {
                    let _ = write!(line, " {:.2e} | {:.2e} | {:.2e} |", st.mean, st.median, st.max);
                }
                _ => line.push_str(" failed | failed | failed |"),
            }
        }
        let _ = writeln!(s, "{line}");
    }
    let failed: usize = stats.values().map(|st| st.failed).sum();
    if failed > 0 {
        let _ = writeln!(s, "\n{failed} trial(s) failed and are left out of the statistics.");
    }
    s
}

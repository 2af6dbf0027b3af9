//! Matrix files and instance bundles.

use std::fs;
use std::path::{Path, PathBuf};

use nmfid::geometry::ScatterVerdict;
use nmfid::synthlab::{CertifyMode, Instance};
use nmfid::DenseMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Headerless CSV, one matrix row per line, 17 significant digits, LF.
pub fn matrix_to_csv(a: &DenseMatrix) -> String {
    let mut out = String::with_capacity(a.rows() * a.cols() * 24);
    for i in 0..a.rows() {
        let line: Vec<String> = a.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, a: &DenseMatrix) -> Result<(), CliError> {
    fs::write(path, matrix_to_csv(a)).map_err(|e| CliError::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| CliError::Input(format!("{}: line {}: bad number '{f}'", path.display(), i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: empty matrix", path.display())));
    }
    DenseMatrix::from_rows(&rows).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// `meta.json` of a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub case: String,
    pub sparsity: f64,
    pub rho: f64,
    pub seed: u64,
    pub certify: String,
    pub attempts: usize,
    pub verdict: Option<ScatterVerdict>,
    pub w_verdict: Option<ScatterVerdict>,
}

pub fn write_bundle(dir: &Path, inst: &Instance) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_matrix(&dir.join("X.csv"), &inst.x)?;
    write_matrix(&dir.join("W.csv"), &inst.w_true)?;
    write_matrix(&dir.join("H.csv"), &inst.h_true)?;
    let s = &inst.spec;
    let meta = BundleMeta {
        m: s.m,
        n: s.n,
        r: s.r,
        case: s.case.to_string(),
        sparsity: s.sparsity,
        rho: s.rho,
        seed: s.seed,
        certify: s.certify.to_string(),
        attempts: inst.attempts,
        verdict: inst.scatter_report.clone(),
        w_verdict: inst.w_scatter_report.clone(),
    };
    write_json(&dir.join("meta.json"), &meta)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Data to factor, with the ground truth when the input is a bundle.
pub struct Input {
    pub x: DenseMatrix,
    pub h_true: Option<DenseMatrix>,
    pub w_true: Option<DenseMatrix>,
    pub meta: Option<BundleMeta>,
}

/// Reads a bundle directory or a bare `X.csv`.
pub fn read_input(path: &Path) -> Result<Input, CliError> {
    if path.is_dir() {
        let x = read_matrix(&path.join("X.csv"))?;
        let optional = |name: &str| -> Result<Option<DenseMatrix>, CliError> {
            let p = path.join(name);
            if p.exists() { read_matrix(&p).map(Some) } else { Ok(None) }
        };
        let meta_path = path.join("meta.json");
        let meta = if meta_path.exists() {
            let text = fs::read_to_string(&meta_path).map_err(|e| CliError::io(&meta_path, e))?;
            Some(serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", meta_path.display())))?)
        } else {
            None
        };
        Ok(Input { x, h_true: optional("H.csv")?, w_true: optional("W.csv")?, meta })
    } else {
        Ok(Input { x: read_matrix(path)?, h_true: None, w_true: None, meta: None })
    }
}

/// `dir/stem_suffix.csv` next to `out`.
pub fn side_file(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("result");
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

pub fn parse_certify(s: &str) -> Result<CertifyMode, CliError> {
    s.parse().map_err(|e: nmfid::Error| CliError::Usage(e.to_string()))
}

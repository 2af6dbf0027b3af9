//! Command implementations behind the `nmfid` binary.
//!
//! Exit codes: 0 success, 2 invalid arguments or input, 3 no certifiable
//! instance within the regeneration budget, 4 solver failure (or a benchmark
//! cell without a single successful trial), 5 `check` found the condition
//! violated.

pub mod bench;
pub mod commands;
pub mod io;

use std::path::Path;

use thiserror::Error;

pub use commands::{run, Cli};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    CertifyBudget(nmfid::Error),
    #[error("solver failed: {0}")]
    Solver(nmfid::Error),
    #[error("no successful trial in cell {0}")]
    EmptyCell(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// Sorts a library error into the exit-code classes.
    pub fn from_core(e: nmfid::Error) -> Self {
        use nmfid::Error as E;
        match e {
            E::InvalidArgument(_) | E::ShapeMismatch(_) | E::BadShape { .. } | E::NonFinite { .. } | E::ZeroColumn(_) => {
                CliError::Input(e.to_string())
            }
            E::CertifyBudgetExceeded { .. } => CliError::CertifyBudget(e),
            _ => CliError::Solver(e),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::CertifyBudget(_) => 3,
            CliError::Solver(_) | CliError::EmptyCell(_) => 4,
        }
    }
}

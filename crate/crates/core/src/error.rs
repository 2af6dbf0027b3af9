use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix entries length {len} does not match {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not numerically rank {rank}: sigma[{rank}]/sigma[0] = {ratio:e} exceeds {tol:e}")]
    ResidualAboveTolerance { rank: usize, ratio: f64, tol: f64 },
    #[error("singular matrix")]
    Singular,

    #[error("simplex pivot count exceeded {limit}")]
    CycleGuardExceeded { limit: usize },
    #[error("linear program failed: {0}")]
    LpFailure(String),

    #[error("zero vector has no cone membership")]
    ZeroVector,
    #[error("matrix has rank {found}, expected {expected}")]
    RankDeficient { expected: usize, found: usize },
    #[error("intermediate extreme-ray count exceeded {cap}")]
    ExplosionGuard { cap: usize },

    #[error("could not find a nonsingular initial Q after {attempts} attempts")]
    InitSingular { attempts: usize },
    #[error("cofactor vector vanished for row {row}")]
    DegenerateCofactor { row: usize },

    #[error("input data has negative entries")]
    NegativeData,
    #[error("column {0} is zero")]
    ZeroColumn(usize),

    #[error("no certifiable instance after {attempts} regenerations")]
    CertifyBudgetExceeded { attempts: usize },
}

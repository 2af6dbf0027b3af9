//! Dense real linear algebra: matrices, Jacobi SVD, LU determinants and cofactors.

mod lu;
mod matrix;
mod svd;

pub use lu::{cofactor_vector, determinant, gram_det, inverse, minor, Lu};
pub use matrix::{dot, norm2, DenseMatrix};
pub use svd::{numerical_rank, svd, svd_reduce, svd_truncate, ReducedModel, Svd, DEFAULT_RANK_TOL};

//! Identifiable nonnegative matrix factorization.
//!
//! The central solver minimizes `det(WᵀW)` subject to `X = WHᵀ`, `H ≥ 0` and
//! every column of `H` summing to a fixed `rho`. Under the condition that the
//! rows of the true `H` are sufficiently scattered, its optimum recovers the
//! true factors up to permutation and column scaling, with no sign constraint
//! on `W`.
//!
//! Modules:
//! - [`numerics`]: dense matrices, SVD, determinants.
//! - [`linprog`]: small dense two-phase simplex.
//! - [`geometry`]: second-order cones, dual-cone extreme rays, scatter certificates.
//! - [`solver`]: SVD reduction plus alternating LP determinant maximization.
//! - [`baselines`]: HALS least-squares NMF, minimum-volume simplex (VolMin) and
//!   the determinant-regularized fit.
//! - [`synthlab`]: synthetic instances and the permutation-matched MSE.

pub mod baselines;
pub mod error;
pub mod geometry;
pub mod linprog;
pub mod numerics;
pub mod par;
pub mod rng;
pub mod solver;
pub mod synthlab;

pub use error::{Error, Result};
pub use numerics::DenseMatrix;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::norm2;

pub const DEFAULT_CONE_TOL: f64 = 1e-9;

/// Which of the two second-order cones around the all-ones direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    /// `{x : x·1 ≥ √(r−1)‖x‖}`, inscribed in the nonnegative orthant.
    C,
    /// `{x : x·1 ≥ ‖x‖}`, its dual, which contains the orthant.
    CStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecondOrderConeSpec {
    pub r: usize,
    pub kind: ConeKind,
}

impl SecondOrderConeSpec {
    pub fn c(r: usize) -> Self {
        Self { r, kind: ConeKind::C }
    }

    pub fn c_star(r: usize) -> Self {
        Self { r, kind: ConeKind::CStar }
    }

    fn kappa(&self) -> f64 {
        match self.kind {
            ConeKind::C => ((self.r as f64) - 1.0).sqrt(),
            ConeKind::CStar => 1.0,
        }
    }

    /// `x·1 − κ‖x‖`; nonnegative exactly on the cone.
    pub fn margin(&self, x: &[f64]) -> f64 {
        x.iter().sum::<f64>() - self.kappa() * norm2(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Interior,
    Boundary,
    Outside,
}

/// Classifies `x` against the cone; the boundary band is `tol·‖x‖` wide.
pub fn soc_member(x: &[f64], spec: SecondOrderConeSpec, tol: f64) -> Result<Membership> {
    let nx = norm2(x);
    if nx == 0.0 {
        return Err(Error::ZeroVector);
    }
    let m = spec.margin(x);
    Ok(if m.abs() <= tol * nx {
        Membership::Boundary
    } else if m > 0.0 {
        Membership::Interior
    } else {
        Membership::Outside
    })
}

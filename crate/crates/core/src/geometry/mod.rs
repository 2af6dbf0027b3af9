//! Convex-cone machinery for identifiability certificates: the second-order
//! cones `C` and `C*`, extreme rays of `{y : H y ≥ 0}`, and the separability
//! and sufficiently-scattered checks built on them.

mod cones;
mod rays;
mod scatter;

pub use cones::{soc_member, ConeKind, Membership, SecondOrderConeSpec, DEFAULT_CONE_TOL};
pub use rays::{dual_cone_extreme_rays, dual_cone_extreme_rays_capped, ExtremeRaySet, DEFAULT_RAY_CAP};
pub use scatter::{
    check_separability, check_sufficiently_scattered, in_row_cone, refute_by_sampling, sample_boundary_of_c,
    sample_feasible_transform, verdict_from_rays, CertMode, Certificate, RayMargin, ScatterStatus, ScatterVerdict,
};

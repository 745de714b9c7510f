//! Pose and anisotropic scale estimation from 2D-3D correspondences.
//!
//! The closed-form [`aepnp::aepnp_solve`] recovers rotation, translation and
//! two unknown scale factors on the y and z model axes. [`epnp::epnp_solve`]
//! is the rigid baseline. [`ransac`] and [`refine`] make the estimate robust
//! to outliers and noise, and [`sim`] reproduces the synthetic benchmarks.

pub mod aepnp;
pub mod control_points;
pub mod epnp;
pub mod error;
pub mod geometry;
pub mod io;
pub mod ransac;
pub mod refine;
pub mod sim;

pub use aepnp::{aepnp_solve, decompose_scaled_rotation, Preconditioner};
pub use control_points::SolveDiagnostics;
pub use epnp::epnp_solve;
pub use error::{Error, Result};
pub use geometry::{
    nearest_rotation, normalize_pixel, project, rotation_error, scale_error, translation_error,
    CameraIntrinsics, Correspondence, PoseErrors, Rotation, ScaledPose, Vec2, Vec3,
};

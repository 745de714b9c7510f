//! Closed-form pose and anisotropic scale recovery.
//!
//! The model is `lambda_i * u_i = R * diag(1, s1, s2) * x_i + t`. With the
//! control points fixed to the origin and the unit axes, the camera-frame
//! control points directly expose the translation (`c0`) and the scaled
//! rotation columns (`c_j - c0 = s_j * r_j`).

use crate::control_points::{
    build_design_matrix, compute_alphas, fix_cheirality, null_space_vector, unstack,
    ControlPointSet, SolveDiagnostics, MIN_CORRESPONDENCES,
};
use crate::error::{Error, Result};
use crate::geometry::{nearest_rotation, Correspondence, Mat3, Rotation, ScaledPose, Vec2, Vec3};

/// Per-axis divisors applied to the model coordinates before solving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preconditioner {
    pub axis_scales: Vec3,
}

impl Preconditioner {
    const MIN_RMS: f64 = 1e-9;

    /// Root-mean-square of each axis.
    pub fn from_points(points: &[Vec3]) -> Result<Self> {
        let n = points.len().max(1) as f64;
        let sq = points
            .iter()
            .fold(Vec3::zeros(), |acc, p| acc + p.component_mul(p));
        let axis_scales = (sq / n).map(f64::sqrt);
        for axis in 0..3 {
            if !(axis_scales[axis] >= Self::MIN_RMS) {
                return Err(Error::AxisCollapse { axis });
            }
        }
        Ok(Self { axis_scales })
    }

    pub fn new(axis_scales: Vec3) -> Result<Self> {
        if axis_scales.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "axis divisors must be positive, got {axis_scales:?}"
            )));
        }
        Ok(Self { axis_scales })
    }

    pub fn identity() -> Self {
        Self {
            axis_scales: Vec3::repeat(1.0),
        }
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        x.component_div(&self.axis_scales)
    }
}

/// Rotation, per-axis scales and translation read off camera-frame control points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledRotation {
    pub rotation: Rotation,
    pub scales: Vec3,
    pub translation: Vec3,
}

/// Inverts `c_j = R * diag(s) * e_j + t` for canonical control points.
pub fn decompose_scaled_rotation(cps_camera: &[Vec3; 4]) -> Result<ScaledRotation> {
    let t = cps_camera[0];
    let diffs: [Vec3; 3] = std::array::from_fn(|j| cps_camera[j + 1] - t);
    let scales = Vec3::from_fn(|j, _| diffs[j].norm());
    if let Some(j) = (0..3).find(|&j| !(scales[j] > 0.0)) {
        return Err(Error::DegenerateMatrix(scales[j]));
    }
    let columns = Mat3::from_columns(&[
        diffs[0] / scales[0],
        diffs[1] / scales[1],
        diffs[2] / scales[2],
    ]);
    Ok(ScaledRotation {
        rotation: nearest_rotation(&columns)?,
        scales,
        translation: t,
    })
}

/// Solves for rotation, translation and the y/z scales (x-scale fixed to 1).
pub fn aepnp_solve(corrs: &[Correspondence]) -> Result<(ScaledPose, SolveDiagnostics)> {
    aepnp_solve_with(corrs, None)
}

/// As [`aepnp_solve`], optionally overriding the RMS preconditioner.
pub fn aepnp_solve_with(
    corrs: &[Correspondence],
    preconditioner: Option<Preconditioner>,
) -> Result<(ScaledPose, SolveDiagnostics)> {
    if corrs.len() < MIN_CORRESPONDENCES {
        return Err(Error::TooFewCorrespondences {
            needed: MIN_CORRESPONDENCES,
            got: corrs.len(),
        });
    }
    let world: Vec<Vec3> = corrs.iter().map(|c| c.world).collect();
    let pre = match preconditioner {
        Some(p) => p,
        None => Preconditioner::from_points(&world)?,
    };
    let scaled: Vec<Vec3> = world.iter().map(|x| pre.apply(x)).collect();

    let cps = ControlPointSet::canonical();
    let coeffs = compute_alphas(&scaled, &cps)?;
    let normalized: Vec<Vec2> = corrs.iter().map(|c| c.normalized).collect();
    let dm = build_design_matrix(&normalized, &coeffs)?;
    let (mut v, mut diagnostics) = null_space_vector(&dm)?;
    diagnostics.cheirality_flips = fix_cheirality(&mut v, &coeffs);

    let dec = decompose_scaled_rotation(&unstack(&v))?;
    // In the preconditioned frame the recovered scales are mu * s_j * k_j for an
    // unknown overall factor mu; the x-gauge fixes mu = s'_x / k_x.
    let k = pre.axis_scales;
    let mu = dec.scales.x / k.x;
    let s1 = dec.scales.y / (mu * k.y);
    let s2 = dec.scales.z / (mu * k.z);
    let pose = ScaledPose::new(dec.rotation, dec.translation / mu, s1, s2)?;
    Ok((pose, diagnostics))
}

//! Rigid EPnP baseline using only the rank-1 null-space solution.

use nalgebra::SymmetricEigen;

use crate::control_points::{
    build_design_matrix, compute_alphas, fix_cheirality, null_space_vector, unstack,
    ControlPointSet, SolveDiagnostics, MIN_CORRESPONDENCES,
};
use crate::error::{Error, Result};
use crate::geometry::{nearest_rotation, Correspondence, Mat3, ScaledPose, Vec2, Vec3};

/// Centroid plus the principal axes of the point cloud, each scaled by its
/// standard deviation.
pub fn principal_control_points(points: &[Vec3]) -> Result<ControlPointSet> {
    let n = points.len() as f64;
    let c0 = points.iter().sum::<Vec3>() / n;
    let cov = points.iter().fold(Mat3::zeros(), |acc, p| {
        let d = p - c0;
        acc + d * d.transpose()
    }) / n;
    let eig = SymmetricEigen::new(cov);
    let mut world = [c0; 4];
    for j in 0..3 {
        let var = eig.eigenvalues[j];
        if !(var > 1e-18) {
            return Err(Error::DegenerateControlPoints);
        }
        world[j + 1] = c0 + var.sqrt() * eig.eigenvectors.column(j).into_owned();
    }
    ControlPointSet::new(world)
}

/// Rotation and translation taking `from` onto `to` in the least-squares sense.
pub fn rigid_alignment(from: &[Vec3; 4], to: &[Vec3; 4]) -> Result<(crate::geometry::Rotation, Vec3)> {
    let mf = from.iter().sum::<Vec3>() / 4.0;
    let mt = to.iter().sum::<Vec3>() / 4.0;
    let h = from
        .iter()
        .zip(to)
        .fold(Mat3::zeros(), |acc, (f, t)| acc + (t - mt) * (f - mf).transpose());
    let r = nearest_rotation(&h)?;
    let t = mt - r.matrix() * mf;
    Ok((r, t))
}

/// Rigid pose from at least six correspondences. Scales of the returned pose are 1.
pub fn epnp_solve(corrs: &[Correspondence]) -> Result<(ScaledPose, SolveDiagnostics)> {
    if corrs.len() < MIN_CORRESPONDENCES {
        return Err(Error::TooFewCorrespondences {
            needed: MIN_CORRESPONDENCES,
            got: corrs.len(),
        });
    }
    let world: Vec<Vec3> = corrs.iter().map(|c| c.world).collect();
    let cps = principal_control_points(&world)?;
    let coeffs = compute_alphas(&world, &cps)?;
    let normalized: Vec<Vec2> = corrs.iter().map(|c| c.normalized).collect();
    let dm = build_design_matrix(&normalized, &coeffs)?;
    let (mut v, mut diagnostics) = null_space_vector(&dm)?;
    diagnostics.cheirality_flips = fix_cheirality(&mut v, &coeffs);

    // fix the null-vector scale so inter-control-point distances match the model
    let cams = unstack(&v);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..4 {
        for j in i + 1..4 {
            let dc = (cams[i] - cams[j]).norm();
            num += dc * (cps.world[i] - cps.world[j]).norm();
            den += dc * dc;
        }
    }
    if !(den > 0.0) {
        return Err(Error::NumericalFailure);
    }
    let beta = num / den;
    let cams = cams.map(|c| beta * c);
    let (rotation, translation) = rigid_alignment(&cps.world, &cams)?;
    Ok((ScaledPose::rigid(rotation, translation), diagnostics))
}

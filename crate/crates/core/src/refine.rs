//! Levenberg-Marquardt refinement of rotation, translation and the two
//! log-scales against the summed squared reprojection error.
//!
//! Parameter increments are `[w (3), dt (3), dlog s1, dlog s2]`, with the
//! rotation update composed on the right: `R <- R * exp(w)`.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::{nearest_rotation, CameraIntrinsics, Correspondence, Mat3, Rotation, ScaledPose, Vec3};

pub const PARAMETERS: usize = 8;

pub type Increment = SVector<f64, PARAMETERS>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            gradient_tolerance: 1e-10,
            step_tolerance: 1e-12,
            initial_damping: 1e-3,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.max_iterations > 0
            && self.gradient_tolerance > 0.0
            && self.step_tolerance > 0.0
            && self.initial_damping > 0.0;
        if !positive {
            return Err(Error::InvalidConfig(format!(
                "refinement settings must all be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RefineReport {
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Applies a parameter increment to `pose`.
pub fn apply_increment(pose: &ScaledPose, delta: &Increment) -> ScaledPose {
    let w = Vec3::new(delta[0], delta[1], delta[2]);
    let composed = pose.rotation.matrix() * Rotation::exp(&w).matrix();
    // composing exact rotations only drifts at round-off level
    let rotation = nearest_rotation(&composed).unwrap_or_else(|_| pose.rotation.compose(&Rotation::exp(&w)));
    ScaledPose {
        rotation,
        translation: pose.translation + Vec3::new(delta[3], delta[4], delta[5]),
        s1: pose.s1 * delta[6].exp(),
        s2: pose.s2 * delta[7].exp(),
    }
}

/// Stacked `projection - observation` residuals, `2n` entries.
pub fn residuals(pose: &ScaledPose, corrs: &[Correspondence], k: &CameraIntrinsics) -> Result<DVector<f64>> {
    let mut r = DVector::zeros(2 * corrs.len());
    for (i, c) in corrs.iter().enumerate() {
        let p = crate::geometry::project(pose, &c.world, k)?;
        r[2 * i] = p.x - c.pixel.x;
        r[2 * i + 1] = p.y - c.pixel.y;
    }
    Ok(r)
}

pub fn cost(pose: &ScaledPose, corrs: &[Correspondence], k: &CameraIntrinsics) -> Result<f64> {
    Ok(residuals(pose, corrs, k)?.norm_squared())
}

/// Analytic `2n x 8` Jacobian of [`residuals`] with respect to an increment at zero.
pub fn jacobian(pose: &ScaledPose, corrs: &[Correspondence], k: &CameraIntrinsics) -> Result<DMatrix<f64>> {
    let r = pose.rotation.matrix();
    let mut j = DMatrix::zeros(2 * corrs.len(), PARAMETERS);
    for (i, c) in corrs.iter().enumerate() {
        let y = pose.scale_diagonal().component_mul(&c.world);
        let pc = r * y + pose.translation;
        if !(pc.z > 0.0) {
            return Err(Error::NonPositiveDepth(pc.z));
        }
        let iz = 1.0 / pc.z;
        let d_proj = SMatrix::<f64, 2, 3>::new(
            k.fx * iz,
            0.0,
            -k.fx * pc.x * iz * iz,
            0.0,
            k.fy * iz,
            -k.fy * pc.y * iz * iz,
        );
        let mut d_point = SMatrix::<f64, 3, PARAMETERS>::zeros();
        d_point.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-r * skew(&y)));
        d_point.fixed_view_mut::<3, 3>(0, 3).copy_from(&Mat3::identity());
        d_point.set_column(6, &(r.column(1) * y.y));
        d_point.set_column(7, &(r.column(2) * y.z));
        let block = d_proj * d_point;
        j.view_mut((2 * i, 0), (2, PARAMETERS)).copy_from(&block);
    }
    Ok(j)
}

/// Central finite-difference Jacobian, used to check [`jacobian`].
pub fn numeric_jacobian(
    pose: &ScaledPose,
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    step: f64,
) -> Result<DMatrix<f64>> {
    let mut j = DMatrix::zeros(2 * corrs.len(), PARAMETERS);
    for p in 0..PARAMETERS {
        let mut d = Increment::zeros();
        d[p] = step;
        let plus = residuals(&apply_increment(pose, &d), corrs, k)?;
        let minus = residuals(&apply_increment(pose, &(-d)), corrs, k)?;
        j.set_column(p, &((plus - minus) / (2.0 * step)));
    }
    Ok(j)
}

pub fn refine(
    pose0: &ScaledPose,
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    cfg: &RefineConfig,
) -> Result<(ScaledPose, RefineReport)> {
    cfg.validate()?;
    if 2 * corrs.len() < PARAMETERS {
        return Err(Error::InsufficientResiduals {
            residuals: 2 * corrs.len(),
            parameters: PARAMETERS,
        });
    }
    let mut pose = *pose0;
    let mut current = cost(&pose, corrs, k)?;
    let initial_cost = current;
    let mut damping = cfg.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let r = residuals(&pose, corrs, k)?;
        let j = jacobian(&pose, corrs, k)?;
        let g = j.tr_mul(&r);
        if g.amax() < cfg.gradient_tolerance {
            converged = true;
            break;
        }
        let h = j.tr_mul(&j);
        let diag_floor = 1e-12 * h.diagonal().amax().max(1.0);

        let mut accepted = false;
        while !accepted {
            let mut damped = h.clone();
            for d in 0..PARAMETERS {
                damped[(d, d)] += damping * h[(d, d)].max(diag_floor);
            }
            let Some(chol) = damped.cholesky() else {
                damping *= 10.0;
                if damping > 1e16 {
                    return Err(Error::NumericalFailure);
                }
                continue;
            };
            let step = -chol.solve(&g);
            if step.norm() < cfg.step_tolerance {
                converged = true;
                break;
            }
            let delta = Increment::from_iterator(step.iter().copied());
            let candidate = apply_increment(&pose, &delta);
            let candidate_cost = cost(&candidate, corrs, k).unwrap_or(f64::INFINITY);
            if candidate_cost < current {
                pose = candidate;
                current = candidate_cost;
                damping = (damping / 3.0).max(1e-12);
                accepted = true;
            } else {
                damping *= 10.0;
                if damping > 1e16 {
                    // no descent direction left at this precision
                    converged = true;
                    break;
                }
            }
        }
        if converged {
            break;
        }
    }

    Ok((
        pose,
        RefineReport {
            initial_cost,
            final_cost: current,
            iterations,
            converged,
        },
    ))
}

//! Camera model, pose types and the evaluation metrics.
//!
//! Everything uses the column-vector convention `p_camera = R * S * p_world + t`
//! where `S = diag(1, s1, s2)`.

use nalgebra::{Matrix3, Unit, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Pinhole intrinsics without skew or distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::Validation(format!(
                "focal lengths must be positive and finite (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::Validation("principal point must be finite".into()));
        }
        Ok(())
    }

    /// Maps a pixel onto the `z = 1` plane.
    pub fn normalize(&self, p: &Vec2) -> Vec2 {
        Vec2::new((p.x - self.cx) / self.fx, (p.y - self.cy) / self.fy)
    }

    pub fn denormalize(&self, u: &Vec2) -> Vec2 {
        Vec2::new(self.fx * u.x + self.cx, self.fy * u.y + self.cy)
    }
}

impl Default for CameraIntrinsics {
    /// The 640x480 virtual camera used by the synthetic benchmarks.
    fn default() -> Self {
        Self {
            fx: 150.0,
            fy: 150.0,
            cx: 320.0,
            cy: 240.0,
        }
    }
}

/// Free-function form of [`CameraIntrinsics::normalize`].
pub fn normalize_pixel(k: &CameraIntrinsics, p: &Vec2) -> Vec2 {
    k.normalize(p)
}

/// A 2D observation paired with its 3D model point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub world: Vec3,
    pub pixel: Vec2,
    pub normalized: Vec2,
}

impl Correspondence {
    pub fn new(world: Vec3, pixel: Vec2, k: &CameraIntrinsics) -> Self {
        Self {
            world,
            pixel,
            normalized: k.normalize(&pixel),
        }
    }
}

/// A proper rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    const TOL: f64 = 1e-9;

    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Accepts `m` only if it is orthonormal with determinant +1 (to 1e-9).
    pub fn new(m: Mat3) -> Result<Self> {
        let defect = (m.transpose() * m - Mat3::identity()).abs().max();
        if defect > Self::TOL || (m.determinant() - 1.0).abs() > Self::TOL {
            return Err(Error::Validation(format!(
                "matrix is not a rotation (orthonormality defect {defect:e}, det {})",
                m.determinant()
            )));
        }
        Ok(Self(m))
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let axis = Unit::new_normalize(*axis);
        Self(*nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix())
    }

    /// Exponential map of an axis-angle vector.
    pub fn exp(omega: &Vec3) -> Self {
        Self(*nalgebra::Rotation3::new(*omega).matrix())
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>) -> Self {
        Self(*q.to_rotation_matrix().matrix())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn to_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(self.0))
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    pub fn from_row_major(v: &[f64; 9]) -> Result<Self> {
        Self::new(Mat3::from_row_slice(v))
    }
}

/// Rotation, translation and the two anisotropic scales of the y and z model axes.
/// The x-axis scale is fixed to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPose {
    pub rotation: Rotation,
    pub translation: Vec3,
    pub s1: f64,
    pub s2: f64,
}

impl ScaledPose {
    pub fn new(rotation: Rotation, translation: Vec3, s1: f64, s2: f64) -> Result<Self> {
        for s in [s1, s2] {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidScale(s));
            }
        }
        Ok(Self {
            rotation,
            translation,
            s1,
            s2,
        })
    }

    pub fn rigid(rotation: Rotation, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
            s1: 1.0,
            s2: 1.0,
        }
    }

    pub fn scale_diagonal(&self) -> Vec3 {
        Vec3::new(1.0, self.s1, self.s2)
    }

    /// Model point to camera frame.
    pub fn transform(&self, x: &Vec3) -> Vec3 {
        self.rotation.matrix() * self.scale_diagonal().component_mul(x) + self.translation
    }
}

/// Projects a model point to pixels under `pose`.
pub fn project(pose: &ScaledPose, x: &Vec3, k: &CameraIntrinsics) -> Result<Vec2> {
    let pc = pose.transform(x);
    if !(pc.z > 0.0) {
        return Err(Error::NonPositiveDepth(pc.z));
    }
    Ok(Vec2::new(
        k.fx * pc.x / pc.z + k.cx,
        k.fy * pc.y / pc.z + k.cy,
    ))
}

/// Geodesic angle between two rotations, in degrees.
///
/// Equal to `acos((trace(R_gt^T R) - 1) / 2)`. The cosine is paired with the
/// sine from the skew part so small angles keep full precision.
pub fn rotation_error(r: &Rotation, r_gt: &Rotation) -> f64 {
    let q = r_gt.matrix().transpose() * r.matrix();
    let cos = ((q.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let sin = 0.5
        * Vec3::new(
            q[(2, 1)] - q[(1, 2)],
            q[(0, 2)] - q[(2, 0)],
            q[(1, 0)] - q[(0, 1)],
        )
        .norm();
    sin.atan2(cos).to_degrees()
}

pub fn translation_error(t: &Vec3, t_gt: &Vec3) -> f64 {
    (t - t_gt).norm()
}

/// Relative scale error `|s - s_gt| / s_gt` as a fraction.
pub fn scale_error(s: f64, s_gt: f64) -> Result<f64> {
    if !(s_gt > 0.0) {
        return Err(Error::InvalidGroundTruth(s_gt));
    }
    Ok((s - s_gt).abs() / s_gt)
}

/// Closest rotation to `m` in the Frobenius norm.
pub fn nearest_rotation(m: &Mat3) -> Result<Rotation> {
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateMatrix(0.0)),
    };
    let smallest = svd.singular_values.min();
    if !(smallest >= 1e-12) {
        return Err(Error::DegenerateMatrix(smallest));
    }
    let d = (u * v_t).determinant().signum();
    let r = u * Mat3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * v_t;
    Ok(Rotation(r))
}

/// The three pose metrics against a ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseErrors {
    pub rotation_deg: f64,
    pub translation: f64,
    pub s1: f64,
    pub s2: f64,
}

impl PoseErrors {
    pub fn between(estimate: &ScaledPose, truth: &ScaledPose) -> Result<Self> {
        Ok(Self {
            rotation_deg: rotation_error(&estimate.rotation, &truth.rotation),
            translation: translation_error(&estimate.translation, &truth.translation),
            s1: scale_error(estimate.s1, truth.s1)?,
            s2: scale_error(estimate.s2, truth.s2)?,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.rotation_deg
            .max(self.translation)
            .max(self.s1)
            .max(self.s2)
    }
}

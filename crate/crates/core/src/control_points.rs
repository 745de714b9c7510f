//! Control-point parametrization shared by the EPnP and AEPnP solvers: barycentric
//! coefficients, the `2n x 12` homogeneous system and its null-space solve.

use nalgebra::{DMatrix, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec2, Vec3};

pub type Vec12 = SVector<f64, 12>;

/// Fewest correspondences giving the rank-11 system a one-dimensional null space.
pub const MIN_CORRESPONDENCES: usize = 6;

/// Smallest accepted ratio between the two smallest singular values.
pub const MIN_CONDITION_GAP: f64 = 10.0;

const RELATIVE_ZERO: f64 = 1e-12;

/// Four control points in the model frame, and optionally their camera-frame images.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPointSet {
    pub world: [Vec3; 4],
    pub camera: Option<[Vec3; 4]>,
}

impl ControlPointSet {
    /// Origin plus the three unit axes.
    pub fn canonical() -> Self {
        Self {
            world: [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()],
            camera: None,
        }
    }

    pub fn new(world: [Vec3; 4]) -> Result<Self> {
        let cps = Self {
            world,
            camera: None,
        };
        if cps.basis().determinant().abs() < 1e-12 {
            return Err(Error::DegenerateControlPoints);
        }
        Ok(cps)
    }

    pub fn is_canonical(&self) -> bool {
        self.world == Self::canonical().world
    }

    /// Columns are `c_j - c_0` for j = 1..3.
    pub fn basis(&self) -> Mat3 {
        let c0 = self.world[0];
        Mat3::from_columns(&[self.world[1] - c0, self.world[2] - c0, self.world[3] - c0])
    }
}

/// Per-point affine weights over the four control points.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricCoeffs {
    pub alphas: Vec<[f64; 4]>,
}

impl BarycentricCoeffs {
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Evaluates `sum_j alpha_ij * points[j]` for point `i`.
    pub fn combine(&self, i: usize, points: &[Vec3; 4]) -> Vec3 {
        self.alphas[i]
            .iter()
            .zip(points)
            .fold(Vec3::zeros(), |acc, (a, c)| acc + *a * c)
    }
}

pub fn compute_alphas(points: &[Vec3], cps: &ControlPointSet) -> Result<BarycentricCoeffs> {
    if points.is_empty() {
        return Err(Error::TooFewCorrespondences { needed: 1, got: 0 });
    }
    let alphas = if cps.is_canonical() {
        points
            .iter()
            .map(|x| [1.0 - x.x - x.y - x.z, x.x, x.y, x.z])
            .collect()
    } else {
        let basis = cps.basis();
        let lu = basis.lu();
        if basis.determinant().abs() < 1e-12 {
            return Err(Error::DegenerateControlPoints);
        }
        points
            .iter()
            .map(|x| {
                let a = lu
                    .solve(&(x - cps.world[0]))
                    .ok_or(Error::DegenerateControlPoints)?;
                Ok([1.0 - a.x - a.y - a.z, a.x, a.y, a.z])
            })
            .collect::<Result<_>>()?
    };
    Ok(BarycentricCoeffs { alphas })
}

/// The homogeneous system `A * [c0; c1; c2; c3] = 0` in camera-frame control points.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub a: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }
}

pub fn build_design_matrix(normalized: &[Vec2], coeffs: &BarycentricCoeffs) -> Result<DesignMatrix> {
    let n = normalized.len();
    if n < MIN_CORRESPONDENCES {
        return Err(Error::TooFewCorrespondences {
            needed: MIN_CORRESPONDENCES,
            got: n,
        });
    }
    if coeffs.len() != n {
        return Err(Error::Validation(format!(
            "{} image points but {} coefficient rows",
            n,
            coeffs.len()
        )));
    }
    let mut a = DMatrix::zeros(2 * n, 12);
    for (i, (u, alpha)) in normalized.iter().zip(&coeffs.alphas).enumerate() {
        for (j, &aij) in alpha.iter().enumerate() {
            a[(2 * i, 3 * j)] = aij;
            a[(2 * i, 3 * j + 2)] = -u.x * aij;
            a[(2 * i + 1, 3 * j + 1)] = aij;
            a[(2 * i + 1, 3 * j + 2)] = -u.y * aij;
        }
    }
    Ok(DesignMatrix { a })
}

/// How well-posed a linear solve was.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct SolveDiagnostics {
    /// Smallest and second-smallest singular values of the design matrix.
    pub smallest_singular_values: [f64; 2],
    /// Second-smallest over smallest singular value.
    pub condition_gap: f64,
    pub cheirality_flips: usize,
}

/// Right singular vector of the smallest singular value, with unit norm.
///
/// The tall system is first reduced to its 12x12 triangular QR factor, which
/// has the same singular values and right singular vectors.
pub fn null_space_vector(dm: &DesignMatrix) -> Result<(Vec12, SolveDiagnostics)> {
    if dm.a.ncols() != 12 {
        return Err(Error::Validation(format!(
            "design matrix must have 12 columns, got {}",
            dm.a.ncols()
        )));
    }
    if dm.rows() < 12 {
        return Err(Error::TooFewCorrespondences {
            needed: MIN_CORRESPONDENCES,
            got: dm.rows() / 2,
        });
    }
    let r = dm.a.clone().qr().r();
    let r = SMatrix::<f64, 12, 12>::from_iterator(r.iter().copied());
    let svd = r.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::NumericalFailure)?;

    let mut order: Vec<usize> = (0..12).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let (lo, next) = (order[0], order[1]);
    let smallest = svd.singular_values[lo];
    let second = svd.singular_values[next];
    // singular values at round-off level count as zero, so two of them never
    // look separated
    let floor = RELATIVE_ZERO * svd.singular_values.max();
    let condition_gap = second / smallest.max(floor);
    let diagnostics = SolveDiagnostics {
        smallest_singular_values: [smallest, second],
        condition_gap,
        cheirality_flips: 0,
    };
    if condition_gap < MIN_CONDITION_GAP {
        return Err(Error::RankDeficient { gap: condition_gap });
    }
    let v: Vec12 = v_t.row(lo).transpose();
    Ok((v.normalize(), diagnostics))
}

/// Splits the stacked null vector into four 3-vectors.
pub fn unstack(v: &Vec12) -> [Vec3; 4] {
    std::array::from_fn(|j| Vec3::new(v[3 * j], v[3 * j + 1], v[3 * j + 2]))
}

pub fn stack(points: &[Vec3; 4]) -> Vec12 {
    Vec12::from_iterator(points.iter().flat_map(|p| [p.x, p.y, p.z]))
}

/// Flips the sign of the camera control points so most points end up in front
/// of the camera. Returns the number of points that were behind it before.
pub(crate) fn fix_cheirality(v: &mut Vec12, coeffs: &BarycentricCoeffs) -> usize {
    let cams = unstack(v);
    let negative = (0..coeffs.len())
        .filter(|&i| coeffs.combine(i, &cams).z < 0.0)
        .count();
    let positive = coeffs.len() - negative;
    let flip = negative > positive || (negative == positive && cams[0].z < 0.0);
    if flip {
        *v = -*v;
    }
    negative
}

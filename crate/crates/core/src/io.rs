//! Correspondence files, pose reports and the sweep CSV format.
//!
//! A correspondence file is a JSON object:
//!
//! ```json
//! {
//!   "intrinsics": {"fx": 150.0, "fy": 150.0, "cx": 320.0, "cy": 240.0},
//!   "points": [{"world": [0.1, -0.2, 0.3], "pixel": [331.5, 228.0]}, ...],
//!   "truth": {"rotation": [r00, r01, r02, r10, ...], "translation": [tx, ty, tz], "s1": 1.2, "s2": 0.8}
//! }
//! ```
//!
//! `truth` is optional. The rotation is row-major and maps model to camera
//! coordinates: `p_cam = R * diag(1, s1, s2) * p_world + t`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control_points::{SolveDiagnostics, MIN_CORRESPONDENCES};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Correspondence, PoseErrors, Rotation, ScaledPose, Vec2, Vec3};
use crate::refine::RefineReport;
use crate::sim::SweepRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub world: [f64; 3],
    pub pixel: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthRecord {
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    pub s1: f64,
    pub s2: f64,
}

impl TruthRecord {
    pub fn from_pose(pose: &ScaledPose) -> Self {
        Self {
            rotation: pose.rotation.to_row_major(),
            translation: pose.translation.into(),
            s1: pose.s1,
            s2: pose.s2,
        }
    }

    pub fn to_pose(&self) -> Result<ScaledPose> {
        let rotation = Rotation::from_row_major(&self.rotation)?;
        ScaledPose::new(rotation, Vec3::from(self.translation), self.s1, self.s2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceFile {
    pub intrinsics: CameraIntrinsics,
    pub points: Vec<PointRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthRecord>,
}

impl CorrespondenceFile {
    pub fn new(corrs: &[Correspondence], intrinsics: CameraIntrinsics, truth: Option<&ScaledPose>) -> Self {
        Self {
            intrinsics,
            points: corrs
                .iter()
                .map(|c| PointRecord {
                    world: c.world.into(),
                    pixel: c.pixel.into(),
                })
                .collect(),
            truth: truth.map(TruthRecord::from_pose),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        // only f64 and plain containers: serialization cannot fail
        serde_json::to_string_pretty(self).expect("correspondence file serializes")
    }

    /// Checks values and builds correspondences with normalized coordinates.
    pub fn into_scene(self) -> Result<LoadedScene> {
        self.intrinsics.validate()?;
        if self.points.len() < MIN_CORRESPONDENCES {
            return Err(Error::Validation(format!(
                "need at least {MIN_CORRESPONDENCES} points, file has {}",
                self.points.len()
            )));
        }
        let mut corrs = Vec::with_capacity(self.points.len());
        for (i, p) in self.points.iter().enumerate() {
            if p.world.iter().chain(&p.pixel).any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("point {i} has a non-finite value")));
            }
            corrs.push(Correspondence::new(
                Vec3::from(p.world),
                Vec2::from(p.pixel),
                &self.intrinsics,
            ));
        }
        let truth = match &self.truth {
            Some(t) => {
                let values = t.rotation.iter().chain(&t.translation).chain([&t.s1, &t.s2]);
                if values.into_iter().any(|v| !v.is_finite()) {
                    return Err(Error::Validation("truth block has a non-finite value".into()));
                }
                Some(t.to_pose()?)
            }
            None => None,
        };
        Ok(LoadedScene {
            corrs,
            intrinsics: self.intrinsics,
            truth,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScene {
    pub corrs: Vec<Correspondence>,
    pub intrinsics: CameraIntrinsics,
    pub truth: Option<ScaledPose>,
}

pub fn load_correspondence_file(path: impl AsRef<Path>) -> Result<LoadedScene> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    CorrespondenceFile::from_json(&text)?.into_scene()
}

pub fn write_correspondence_file(path: impl AsRef<Path>, file: &CorrespondenceFile) -> Result<()> {
    let mut text = file.to_json();
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Divides the y and z model coordinates by `s1` and `s2`, so that solving the
/// result recovers `(s1, s2)` for data that was rigid before.
pub fn apply_anisotropic_augmentation(corrs: &[Correspondence], s1: f64, s2: f64) -> Result<Vec<Correspondence>> {
    for s in [s1, s2] {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidScale(s));
        }
    }
    Ok(corrs
        .iter()
        .map(|c| Correspondence {
            world: Vec3::new(c.world.x, c.world.y / s1, c.world.z / s2),
            ..*c
        })
        .collect())
}

/// Solver output as printed by the command line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseReport {
    pub method: String,
    /// Row-major, model to camera.
    pub rotation: [f64; 9],
    /// `[w, x, y, z]`.
    pub quaternion: [f64; 4],
    pub translation: [f64; 3],
    pub s1: f64,
    pub s2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<SolveDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inliers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ransac_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement: Option<RefineReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors: Option<PoseErrors>,
}

impl PoseReport {
    pub fn new(method: &str, pose: &ScaledPose) -> Self {
        let q = pose.rotation.to_quaternion();
        Self {
            method: method.to_string(),
            rotation: pose.rotation.to_row_major(),
            quaternion: [q.w, q.i, q.j, q.k],
            translation: pose.translation.into(),
            s1: pose.s1,
            s2: pose.s2,
            diagnostics: None,
            inliers: None,
            ransac_iterations: None,
            refinement: None,
            errors: None,
        }
    }
}

pub const CSV_HEADER: [&str; 14] = [
    "parameter_name",
    "parameter_value",
    "method",
    "trials",
    "failure_rate",
    "median_r_err_deg",
    "iqr_r_err_deg",
    "median_t_err",
    "iqr_t_err",
    "median_s1_err_frac",
    "iqr_s1_err_frac",
    "median_s2_err_frac",
    "iqr_s2_err_frac",
    "mean_runtime_us",
];

/// 17 significant digits, enough to reproduce any f64 exactly.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    let context = e
        .position()
        .map(|p| format!("csv line {}", p.line()))
        .unwrap_or_else(|| "csv".into());
    Error::Parse {
        context,
        message: e.to_string(),
    }
}

pub fn write_sweep_csv<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.parameter_name.clone(),
            fmt_f64(r.parameter_value),
            r.method.to_string(),
            r.trials.to_string(),
            fmt_f64(r.failure_rate),
            fmt_f64(r.median_r_err_deg),
            fmt_f64(r.iqr_r_err_deg),
            fmt_f64(r.median_t_err),
            fmt_f64(r.iqr_t_err),
            fmt_f64(r.median_s1_err),
            fmt_f64(r.iqr_s1_err),
            fmt_f64(r.median_s2_err),
            fmt_f64(r.iqr_s2_err),
            fmt_f64(r.mean_runtime_us),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse {
            context: "csv header".into(),
            message: format!("unexpected columns {header:?}"),
        });
    }
    let mut records = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let field = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|e| Error::Parse {
                context: format!("csv row {} column {}", row + 1, CSV_HEADER[i]),
                message: e.to_string(),
            })
        };
        records.push(SweepRecord {
            parameter_name: rec[0].to_string(),
            parameter_value: field(1)?,
            method: rec[2].parse()?,
            trials: rec[3].parse().map_err(|e: std::num::ParseIntError| Error::Parse {
                context: format!("csv row {} column trials", row + 1),
                message: e.to_string(),
            })?,
            failure_rate: field(4)?,
            median_r_err_deg: field(5)?,
            iqr_r_err_deg: field(6)?,
            median_t_err: field(7)?,
            iqr_t_err: field(8)?,
            median_s1_err: field(9)?,
            iqr_s1_err: field(10)?,
            median_s2_err: field(11)?,
            iqr_s2_err: field(12)?,
            mean_runtime_us: field(13)?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_scene, Method, SceneConfig};
    use proptest::prelude::*;

    fn sample_file(n: usize) -> CorrespondenceFile {
        let scene = generate_scene(&SceneConfig {
            n_points: n,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        CorrespondenceFile::new(&scene.corrs, SceneConfig::default().intrinsics, Some(&scene.truth))
    }

    #[test]
    fn six_point_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        write_correspondence_file(&path, &sample_file(6)).unwrap();
        let loaded = load_correspondence_file(&path).unwrap();
        assert_eq!(loaded.corrs.len(), 6);
        assert!(loaded.truth.is_some());
        let c = loaded.corrs[0];
        assert_eq!(c.normalized, loaded.intrinsics.normalize(&c.pixel));
    }

    #[test]
    fn missing_intrinsics_names_the_block() {
        let text = r#"{"points": []}"#;
        match CorrespondenceFile::from_json(text) {
            Err(Error::Parse { message, context }) => {
                assert!(message.contains("intrinsics"), "{message}");
                assert!(context.contains("line 1"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_errors() {
        let mut f = sample_file(6);
        f.points.pop();
        assert!(matches!(f.clone().into_scene(), Err(Error::Validation(_))));

        let mut f = sample_file(6);
        f.intrinsics.fx = 0.0;
        assert!(matches!(f.into_scene(), Err(Error::Validation(_))));

        let text = sample_file(6).to_json().replacen("\"pixel\": [", "\"pixel\": [1e999, ", 1);
        // 1e999 overflows to infinity in the parser or is rejected outright
        assert!(CorrespondenceFile::from_json(&text)
            .and_then(|f| f.into_scene())
            .is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_correspondence_file("/nonexistent/missing.json"),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn augmentation() {
        let corrs = sample_file(20).into_scene().unwrap().corrs;
        assert_eq!(apply_anisotropic_augmentation(&corrs, 1.0, 1.0).unwrap(), corrs);
        assert_eq!(
            apply_anisotropic_augmentation(&corrs, 0.0, 1.0),
            Err(Error::InvalidScale(0.0))
        );
        let aug = apply_anisotropic_augmentation(&corrs, 2.0, 0.5).unwrap();
        assert_eq!(aug[3].world.y, corrs[3].world.y / 2.0);
        assert_eq!(aug[3].pixel, corrs[3].pixel);
    }

    #[test]
    fn augmented_rigid_data_recovers_drawn_scales() {
        let scene = generate_scene(&SceneConfig {
            n_points: 300,
            scale_range: (1.0, 1.0),
            seed: 4,
            ..Default::default()
        })
        .unwrap();
        let aug = apply_anisotropic_augmentation(&scene.corrs, 2.0, 0.5).unwrap();
        let (pose, _) = crate::aepnp::aepnp_solve(&aug).unwrap();
        assert!((pose.s1 - 2.0).abs() < 1e-6 && (pose.s2 - 0.5).abs() < 1e-6, "{pose:?}");
        assert!(crate::geometry::rotation_error(&pose.rotation, &scene.truth.rotation) < 1e-6);
    }

    #[test]
    fn csv_header_and_bad_header() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, CSV_HEADER.join(",") + "\n");
        assert!(read_sweep_csv("a,b\n".as_bytes()).is_err());
    }

    fn finite_or_nan() -> impl Strategy<Value = f64> {
        prop_oneof![
            9 => any::<f64>().prop_filter("finite", |v| v.is_finite()),
            1 => Just(f64::NAN),
        ]
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(
            values in prop::collection::vec(finite_or_nan(), 11),
            trials in 1usize..5000,
            m in 0usize..4,
        ) {
            let methods = [Method::Epnp, Method::Aepnp, Method::RansacAepnp, Method::RansacAepnpRefined];
            let rec = SweepRecord {
                parameter_name: "noise_sigma_px".into(),
                parameter_value: values[0],
                method: methods[m],
                trials,
                failure_rate: values[1],
                median_r_err_deg: values[2],
                iqr_r_err_deg: values[3],
                median_t_err: values[4],
                iqr_t_err: values[5],
                median_s1_err: values[6],
                iqr_s1_err: values[7],
                median_s2_err: values[8],
                iqr_s2_err: values[9],
                mean_runtime_us: values[10],
            };
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, std::slice::from_ref(&rec)).unwrap();
            let back = read_sweep_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), 1);
            let b = &back[0];
            let pairs = [
                (rec.parameter_value, b.parameter_value), (rec.failure_rate, b.failure_rate),
                (rec.median_r_err_deg, b.median_r_err_deg), (rec.iqr_r_err_deg, b.iqr_r_err_deg),
                (rec.median_t_err, b.median_t_err), (rec.iqr_t_err, b.iqr_t_err),
                (rec.median_s1_err, b.median_s1_err), (rec.iqr_s1_err, b.iqr_s1_err),
                (rec.median_s2_err, b.median_s2_err), (rec.iqr_s2_err, b.iqr_s2_err),
                (rec.mean_runtime_us, b.mean_runtime_us),
            ];
            for (x, y) in pairs {
                prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()), "{} vs {}", x, y);
            }
            prop_assert_eq!(b.method, rec.method);
            prop_assert_eq!(b.trials, rec.trials);
        }
    }
}

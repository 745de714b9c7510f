//! Browser bindings for the demo page in `www/`. Each export returns a JSON
//! string; failures come back as a rejected string.

use aepnp_core::io::apply_anisotropic_augmentation;
use aepnp_core::ransac::{ransac_aepnp, RansacConfig};
use aepnp_core::sim::{generate_scene, run_noise_sweep, SceneConfig};
use aepnp_core::{aepnp_solve, epnp_solve, project, PoseErrors, ScaledPose};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Estimate {
    method: &'static str,
    s1: f64,
    s2: f64,
    errors: Option<PoseErrors>,
    /// Model points reprojected with the estimate, in pixels.
    reprojected: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct Comparison {
    truth_s1: f64,
    truth_s2: f64,
    observed: Vec<[f64; 2]>,
    estimates: Vec<Estimate>,
}

fn estimate(method: &'static str, result: aepnp_core::Result<ScaledPose>, truth: &ScaledPose, world: &[aepnp_core::Vec3]) -> Estimate {
    let k = SceneConfig::default().intrinsics;
    match result {
        Ok(pose) => Estimate {
            method,
            s1: pose.s1,
            s2: pose.s2,
            errors: PoseErrors::between(&pose, truth).ok(),
            reprojected: world
                .iter()
                .filter_map(|x| project(&pose, x, &k).ok())
                .map(|p| [p.x, p.y])
                .collect(),
        },
        Err(_) => Estimate {
            method,
            s1: f64::NAN,
            s2: f64::NAN,
            errors: None,
            reprojected: Vec::new(),
        },
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Observes a rigid object, stretches the stored model by `1/s1`, `1/s2` on y
/// and z, then solves with EPnP and AEPnP.
#[wasm_bindgen]
pub fn compare_solvers(n: usize, sigma: f64, s1: f64, s2: f64, seed: u64) -> Result<String, String> {
    let scene = generate_scene(&SceneConfig {
        n_points: n,
        noise_sigma_px: sigma,
        scale_range: (1.0, 1.0),
        seed,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let corrs = apply_anisotropic_augmentation(&scene.corrs, s1, s2).map_err(|e| e.to_string())?;
    let truth = ScaledPose::new(scene.truth.rotation, scene.truth.translation, s1, s2).map_err(|e| e.to_string())?;
    let world: Vec<_> = corrs.iter().map(|c| c.world).collect();
    to_json(&Comparison {
        truth_s1: s1,
        truth_s2: s2,
        observed: corrs.iter().map(|c| [c.pixel.x, c.pixel.y]).collect(),
        estimates: vec![
            estimate("epnp", epnp_solve(&corrs).map(|r| r.0), &truth, &world),
            estimate("aepnp", aepnp_solve(&corrs).map(|r| r.0), &truth, &world),
        ],
    })
}

#[derive(Serialize)]
struct CurvePoint {
    sigma: f64,
    method: String,
    failure_rate: f64,
    median_r_err_deg: f64,
    median_s_err: f64,
}

/// Median rotation and scale errors of EPnP and AEPnP against pixel noise.
#[wasm_bindgen]
pub fn noise_curve(max_sigma: f64, steps: usize, n: usize, trials: usize, seed: u64) -> Result<String, String> {
    let steps = steps.max(1);
    let sigmas: Vec<f64> = (0..=steps).map(|i| max_sigma * i as f64 / steps as f64).collect();
    let base = SceneConfig {
        n_points: n,
        seed,
        ..Default::default()
    };
    let records = run_noise_sweep(&sigmas, trials, &base).map_err(|e| e.to_string())?;
    let points: Vec<CurvePoint> = records
        .iter()
        .map(|r| CurvePoint {
            sigma: r.parameter_value,
            method: r.method.to_string(),
            failure_rate: r.failure_rate,
            median_r_err_deg: r.median_r_err_deg,
            median_s_err: 0.5 * (r.median_s1_err + r.median_s2_err),
        })
        .collect();
    to_json(&points)
}

#[derive(Serialize)]
struct OutlierDemo {
    observed: Vec<[f64; 2]>,
    planted_outlier: Vec<bool>,
    inlier: Vec<bool>,
    iterations: usize,
    estimates: Vec<Estimate>,
}

/// Solves a scene with planted outliers by plain AEPnP and by RANSAC-AEPnP.
#[wasm_bindgen]
pub fn ransac_demo(n: usize, outlier_ratio: f64, sigma: f64, threshold_px: f64, seed: u64) -> Result<String, String> {
    let cfg = SceneConfig {
        n_points: n,
        noise_sigma_px: sigma,
        outlier_ratio,
        seed,
        ..Default::default()
    };
    let scene = generate_scene(&cfg).map_err(|e| e.to_string())?;
    let world: Vec<_> = scene.corrs.iter().map(|c| c.world).collect();
    let ransac = RansacConfig {
        inlier_threshold_px: threshold_px,
        seed,
        ..Default::default()
    };
    let robust = ransac_aepnp(&scene.corrs, &cfg.intrinsics, &ransac);
    let (inlier, iterations) = match &robust {
        Ok(r) => (r.inlier_mask.clone(), r.iterations_run),
        Err(_) => (vec![false; n], 0),
    };
    to_json(&OutlierDemo {
        observed: scene.corrs.iter().map(|c| [c.pixel.x, c.pixel.y]).collect(),
        planted_outlier: scene.outlier_flags.clone(),
        inlier,
        iterations,
        estimates: vec![
            estimate("aepnp", aepnp_solve(&scene.corrs).map(|r| r.0), &scene.truth, &world),
            estimate("ransac-aepnp", robust.map(|r| r.pose), &scene.truth, &world),
        ],
    })
}

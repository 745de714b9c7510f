//! RANSAC around the closed-form solver, scored by reprojection error.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::aepnp::aepnp_solve;
use crate::control_points::MIN_CORRESPONDENCES;
use crate::error::{Error, Result};
use crate::geometry::{project, CameraIntrinsics, Correspondence, ScaledPose};
use crate::sim::derive_seed;

/// Upper bound on consensus-set re-estimation rounds after sampling.
const REFIT_ROUNDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub max_iterations: usize,
    pub inlier_threshold_px: f64,
    pub sample_size: usize,
    /// Probability of having drawn at least one all-inlier sample before stopping early.
    pub confidence: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            inlier_threshold_px: 2.0,
            sample_size: MIN_CORRESPONDENCES,
            confidence: 0.99,
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_size < MIN_CORRESPONDENCES {
            return Err(Error::InvalidConfig(format!(
                "sample size must be at least {MIN_CORRESPONDENCES}, got {}",
                self.sample_size
            )));
        }
        if !(self.inlier_threshold_px > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "inlier threshold must be positive, got {}",
                self.inlier_threshold_px
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustResult {
    pub pose: ScaledPose,
    pub inlier_mask: Vec<bool>,
    pub iterations_run: usize,
    /// Number of `true` entries in `inlier_mask`.
    pub best_inlier_count: usize,
    /// Inlier count of the best minimal-sample hypothesis, before re-estimation.
    pub hypothesis_inlier_count: usize,
}

/// Pixel distance between the observation and the projection of its model
/// point; infinite when the point lands behind the camera.
pub fn reprojection_residual(pose: &ScaledPose, corr: &Correspondence, k: &CameraIntrinsics) -> f64 {
    match project(pose, &corr.world, k) {
        Ok(p) => (p - corr.pixel).norm(),
        Err(_) => f64::INFINITY,
    }
}

#[derive(Debug, Clone)]
struct Score {
    count: usize,
    mean_residual: f64,
    mask: Vec<bool>,
}

fn score(pose: &ScaledPose, corrs: &[Correspondence], k: &CameraIntrinsics, threshold: f64) -> Score {
    let mut count = 0;
    let mut sum = 0.0;
    let mask = corrs
        .iter()
        .map(|c| {
            let r = reprojection_residual(pose, c, k);
            let inlier = r <= threshold;
            if inlier {
                count += 1;
                sum += r;
            }
            inlier
        })
        .collect();
    Score {
        count,
        mean_residual: if count > 0 { sum / count as f64 } else { f64::INFINITY },
        mask,
    }
}

fn mean_residual_on(pose: &ScaledPose, corrs: &[Correspondence], k: &CameraIntrinsics, mask: &[bool]) -> f64 {
    let (sum, count) = corrs
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, c), (corr, _)| (s + reprojection_residual(pose, corr, k), c + 1));
    sum / count.max(1) as f64
}

/// Iterations needed to draw an all-inlier sample with the given confidence.
pub fn required_iterations(inlier_ratio: f64, sample_size: usize, confidence: f64, cap: usize) -> usize {
    let p_good = inlier_ratio.clamp(0.0, 1.0).powi(sample_size as i32);
    if p_good <= 0.0 {
        return cap;
    }
    if p_good >= 1.0 {
        return 1;
    }
    let n = ((1.0 - confidence).ln() / (1.0 - p_good).ln()).ceil();
    if n.is_finite() {
        (n.max(1.0) as usize).min(cap)
    } else {
        cap
    }
}

/// Draws the sample used at `iteration`. Each iteration has its own stream.
pub fn sample_indices(seed: u64, iteration: usize, n: usize, sample_size: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, iteration as u64));
    index::sample(&mut rng, n, sample_size).into_vec()
}

pub fn ransac_aepnp(corrs: &[Correspondence], k: &CameraIntrinsics, cfg: &RansacConfig) -> Result<RobustResult> {
    cfg.validate()?;
    let n = corrs.len();
    if n < cfg.sample_size {
        return Err(Error::TooFewCorrespondences {
            needed: cfg.sample_size,
            got: n,
        });
    }

    let mut best: Option<(ScaledPose, Score)> = None;
    let mut required = cfg.max_iterations;
    let mut iterations_run = 0;
    let mut sample = Vec::with_capacity(cfg.sample_size);
    while iterations_run < required {
        let it = iterations_run;
        iterations_run += 1;
        sample.clear();
        sample.extend(
            sample_indices(cfg.seed, it, n, cfg.sample_size)
                .into_iter()
                .map(|i| corrs[i]),
        );
        let Ok((pose, _)) = aepnp_solve(&sample) else {
            continue;
        };
        let s = score(&pose, corrs, k, cfg.inlier_threshold_px);
        // a model that cannot explain as many points as it was fit to is no hypothesis
        if s.count < cfg.sample_size {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, b)) => s.count > b.count || (s.count == b.count && s.mean_residual < b.mean_residual),
        };
        if better {
            required = required_iterations(
                s.count as f64 / n as f64,
                cfg.sample_size,
                cfg.confidence,
                cfg.max_iterations,
            )
            .max(iterations_run);
            best = Some((pose, s));
        }
    }

    let (hypothesis, hyp_score) = best.ok_or(Error::NoHypothesisFound)?;
    let hypothesis_inlier_count = hyp_score.count;
    let mut pose = hypothesis;
    let mut mask = hyp_score.mask.clone();

    // re-estimate on the consensus set until it stops growing
    let mut consensus = hyp_score;
    for _ in 0..REFIT_ROUNDS {
        if consensus.count < MIN_CORRESPONDENCES {
            break;
        }
        let inliers: Vec<Correspondence> = corrs
            .iter()
            .zip(&consensus.mask)
            .filter(|(_, &m)| m)
            .map(|(c, _)| *c)
            .collect();
        let Ok((refit, _)) = aepnp_solve(&inliers) else {
            break;
        };
        if mean_residual_on(&refit, corrs, k, &consensus.mask) > consensus.mean_residual {
            break;
        }
        pose = refit;
        let rescored = score(&refit, corrs, k, cfg.inlier_threshold_px);
        if rescored.count <= consensus.count {
            if rescored.count == consensus.count {
                mask = rescored.mask;
            }
            break;
        }
        mask = rescored.mask.clone();
        consensus = rescored;
    }

    let best_inlier_count = mask.iter().filter(|&&m| m).count();
    Ok(RobustResult {
        pose,
        inlier_mask: mask,
        iterations_run,
        best_inlier_count,
        hypothesis_inlier_count,
    })
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aepnp_core::io::{
    load_correspondence_file, write_correspondence_file, write_sweep_csv, CorrespondenceFile, PoseReport,
};
use aepnp_core::ransac::{ransac_aepnp, RansacConfig};
use aepnp_core::refine::{refine, RefineConfig};
use aepnp_core::sim::{self, SceneConfig, SweepRecord};
use aepnp_core::{aepnp_solve, epnp_solve, CameraIntrinsics, Correspondence, Error, PoseErrors, ScaledPose};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};

/// Pose and anisotropic scale estimation from 2D-3D correspondences.
#[derive(Parser, Debug)]
#[command(name = "aepnp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene and write it as a correspondence file.
    Simulate(SimulateArgs),
    /// Estimate the pose in a correspondence file and print it as JSON.
    Solve(SolveArgs),
    /// EPnP and AEPnP accuracy against pixel noise.
    SweepNoise(SweepNoiseArgs),
    /// EPnP and AEPnP accuracy against the number of correspondences.
    SweepCount(SweepCountArgs),
    /// AEPnP, RANSAC-AEPnP and optionally refined RANSAC-AEPnP against the outlier ratio.
    SweepOutliers(SweepOutliersArgs),
    /// Mean solve time of EPnP and AEPnP against the number of correspondences.
    BenchTime(BenchTimeArgs),
    /// Accuracy with only a handful of keypoints.
    SparseTest(SparseArgs),
}

#[derive(Args, Debug)]
struct SceneArgs {
    /// Lower bound of the drawn y and z scales.
    #[arg(long, default_value_t = 0.5)]
    scale_min: f64,
    /// Upper bound of the drawn y and z scales.
    #[arg(long, default_value_t = 2.0)]
    scale_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SceneArgs {
    fn config(&self) -> SceneConfig {
        SceneConfig {
            scale_range: (self.scale_min, self.scale_max),
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Gaussian pixel noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Fraction of correspondences replaced by random pixels.
    #[arg(long, default_value_t = 0.0)]
    outlier_ratio: f64,
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolveMethod {
    Epnp,
    Aepnp,
    RansacAepnp,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Correspondence file (JSON).
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = SolveMethod::Aepnp)]
    method: SolveMethod,
    /// Polish the estimate by minimizing reprojection error.
    #[arg(long)]
    refine: bool,
    /// RANSAC inlier threshold in pixels.
    #[arg(long, default_value_t = 2.0)]
    threshold_px: f64,
    /// RANSAC iteration cap.
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SweepNoiseArgs {
    /// Comma-separated noise levels in pixels.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2,2.5,3,3.5,4")]
    sigmas: Vec<f64>,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepCountArgs {
    /// Comma-separated correspondence counts.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256,512,1024")]
    counts: Vec<usize>,
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepOutliersArgs {
    /// Comma-separated outlier ratios in [0, 1).
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5")]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    threshold_px: f64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    /// Add a row for RANSAC-AEPnP followed by refinement.
    #[arg(long)]
    refine: bool,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchTimeArgs {
    #[arg(long, value_delimiter = ',', default_value = "16,64,256,1024,4096")]
    counts: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SparseArgs {
    #[arg(long, default_value_t = 7)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn write_csv(path: &Path, records: &[SweepRecord]) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    write_sweep_csv(&mut out, records)?;
    out.flush()?;
    Ok(())
}

fn inliers_of(corrs: &[Correspondence], mask: &[bool]) -> Vec<Correspondence> {
    corrs.iter().zip(mask).filter(|(_, &m)| m).map(|(c, _)| *c).collect()
}

struct Estimate {
    pose: ScaledPose,
    report: PoseReport,
    /// Correspondences the estimate is supported by, used for refinement.
    support: Vec<Correspondence>,
}

fn solve(args: &SolveArgs) -> Result<PoseReport, Error> {
    let scene = load_correspondence_file(&args.file)?;
    let k: CameraIntrinsics = scene.intrinsics;
    let Estimate { mut pose, mut report, support } = match args.method {
        SolveMethod::Epnp | SolveMethod::Aepnp => {
            let (name, (pose, diag)) = match args.method {
                SolveMethod::Epnp => ("epnp", epnp_solve(&scene.corrs)?),
                _ => ("aepnp", aepnp_solve(&scene.corrs)?),
            };
            let mut report = PoseReport::new(name, &pose);
            report.diagnostics = Some(diag);
            Estimate {
                pose,
                report,
                support: scene.corrs.clone(),
            }
        }
        SolveMethod::RansacAepnp => {
            let cfg = RansacConfig {
                inlier_threshold_px: args.threshold_px,
                max_iterations: args.max_iterations,
                seed: args.seed,
                ..Default::default()
            };
            let r = ransac_aepnp(&scene.corrs, &k, &cfg)?;
            let mut report = PoseReport::new("ransac-aepnp", &r.pose);
            report.inliers = Some(r.best_inlier_count);
            report.ransac_iterations = Some(r.iterations_run);
            Estimate {
                pose: r.pose,
                report,
                support: inliers_of(&scene.corrs, &r.inlier_mask),
            }
        }
    };
    if args.refine {
        let (refined_pose, rep) = refine(&pose, &support, &k, &RefineConfig::default())?;
        pose = refined_pose;
        let mut refined = PoseReport::new(&format!("{}+refine", report.method), &pose);
        refined.diagnostics = report.diagnostics;
        refined.inliers = report.inliers;
        refined.ransac_iterations = report.ransac_iterations;
        refined.refinement = Some(rep);
        report = refined;
    }
    if let Some(truth) = &scene.truth {
        report.errors = Some(PoseErrors::between(&pose, truth)?);
    }
    Ok(report)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(a) => {
            let cfg = SceneConfig {
                n_points: a.n,
                noise_sigma_px: a.sigma,
                outlier_ratio: a.outlier_ratio,
                ..a.scene.config()
            };
            let scene = sim::generate_scene(&cfg)?;
            let file = CorrespondenceFile::new(&scene.corrs, cfg.intrinsics, Some(&scene.truth));
            write_correspondence_file(&a.out, &file)
        }
        Command::Solve(a) => {
            let report = solve(&a)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
        Command::SweepNoise(a) => {
            let base = SceneConfig {
                n_points: a.n,
                ..a.scene.config()
            };
            write_csv(&a.out, &sim::run_noise_sweep(&a.sigmas, a.trials, &base)?)
        }
        Command::SweepCount(a) => {
            let records = sim::run_count_sweep(&a.counts, a.sigma, a.trials, &a.scene.config())?;
            write_csv(&a.out, &records)
        }
        Command::SweepOutliers(a) => {
            let base = SceneConfig {
                n_points: a.n,
                noise_sigma_px: a.sigma,
                ..a.scene.config()
            };
            let ransac = RansacConfig {
                inlier_threshold_px: a.threshold_px,
                max_iterations: a.max_iterations,
                seed: a.scene.seed,
                ..Default::default()
            };
            let records = sim::run_outlier_sweep(&a.ratios, a.trials, &base, &ransac, a.refine)?;
            write_csv(&a.out, &records)
        }
        Command::BenchTime(a) => write_csv(&a.out, &sim::run_timing(&a.counts, a.trials, &a.scene.config())?),
        Command::SparseTest(a) => {
            write_csv(&a.out, &sim::run_sparse_keypoint_protocol(a.n, a.sigma, a.trials, a.seed)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

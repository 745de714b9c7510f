//! Acceptance criteria, one line of output each. Exits non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use aepnp_core::refine::{apply_increment, jacobian, numeric_jacobian, Increment};
use aepnp_core::sim::{
    derive_seed, generate_scene, run_count_sweep, run_noise_sweep, run_outlier_sweep, run_sparse_keypoint_protocol,
    run_timing, Method, SceneConfig, SweepRecord,
};
use aepnp_core::ransac::RansacConfig;
use aepnp_core::{aepnp_solve, Error, PoseErrors};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn record(records: &[SweepRecord], method: Method) -> &SweepRecord {
    records.iter().find(|r| r.method == method).unwrap()
}

fn metrics(r: &SweepRecord) -> [f64; 4] {
    [r.median_r_err_deg, r.median_t_err, r.median_s1_err, r.median_s2_err]
}

fn fmt4(m: [f64; 4]) -> String {
    format!("R {:.3e} deg, t {:.3e}, s1 {:.3e}, s2 {:.3e}", m[0], m[1], m[2], m[3])
}

fn noise_free_exactness() -> Verdict {
    let start = Instant::now();
    let records = run_noise_sweep(&[0.0], 100, &SceneConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let r = record(&records, Method::Aepnp);
    let m = metrics(r);
    let pass = m[0] < 1e-5 && m[1] < 1e-7 && m[2] < 1e-7 && m[3] < 1e-7 && secs < 5.0;
    verdict(pass, format!("{}, failures {:.3}, {secs:.2} s", fmt4(m), r.failure_rate))
}

fn baseline_failure() -> Verdict {
    let aniso = run_noise_sweep(&[0.0], 100, &SceneConfig::default()).unwrap();
    let rigid = run_noise_sweep(
        &[0.0],
        100,
        &SceneConfig {
            scale_range: (1.0, 1.0),
            ..Default::default()
        },
    )
    .unwrap();
    let a = record(&aniso, Method::Epnp).median_r_err_deg;
    let r = record(&rigid, Method::Epnp).median_r_err_deg;
    verdict(
        a > 5.0 && r < 1e-4,
        format!("EPnP median R {a:.3} deg anisotropic (need > 5), {r:.3e} deg rigid (need < 1e-4)"),
    )
}

fn noise_trend() -> Verdict {
    let sigmas = [0.5, 1.0, 2.0, 4.0];
    let records = run_noise_sweep(&sigmas, 200, &SceneConfig::default()).unwrap();
    let rows: Vec<[f64; 4]> = records.iter().filter(|r| r.method == Method::Aepnp).map(metrics).collect();
    let pass = rows.windows(2).all(|w| (0..4).all(|k| w[1][k] >= w[0][k]));
    let failures: Vec<String> = records
        .iter()
        .filter(|r| r.method == Method::Aepnp)
        .map(|r| format!("{:.3}", r.failure_rate))
        .collect();
    verdict(
        pass,
        format!(
            "median R by sigma {:?} deg, failure rates {:?}",
            rows.iter().map(|m| format!("{:.3}", m[0])).collect::<Vec<_>>(),
            failures
        ),
    )
}

fn count_trend() -> Verdict {
    let counts = [16, 64, 256, 1024];
    let records = run_count_sweep(&counts, 2.0, 200, &SceneConfig::default()).unwrap();
    let rows: Vec<[f64; 4]> = records.iter().filter(|r| r.method == Method::Aepnp).map(metrics).collect();
    let pass = rows.windows(2).all(|w| (0..4).all(|k| w[1][k] <= 1.1 * w[0][k]));
    verdict(
        pass,
        format!(
            "median R by n {:?} deg",
            rows.iter().map(|m| format!("{:.3}", m[0])).collect::<Vec<_>>()
        ),
    )
}

fn timing() -> Verdict {
    let counts = [64, 256, 1024];
    run_timing(&counts, 20, &SceneConfig::default()).unwrap();
    let records = run_timing(&counts, 300, &SceneConfig::default()).unwrap();
    let mean = |n: usize, m: Method| {
        records
            .iter()
            .find(|r| r.parameter_value == n as f64 && r.method == m)
            .unwrap()
            .mean_runtime_us
    };
    let ratios: Vec<f64> = counts.iter().map(|&n| mean(n, Method::Aepnp) / mean(n, Method::Epnp)).collect();
    let exponent = |m: Method| (mean(1024, m) / mean(64, m)).ln() / 16f64.ln();
    let (ea, ee) = (exponent(Method::Aepnp), exponent(Method::Epnp));
    let pass = ratios.iter().all(|&r| r <= 1.5) && ea < 2.0 && ee < 2.0;
    verdict(
        pass,
        format!(
            "AEPnP/EPnP time ratio {:?}, growth exponent AEPnP {ea:.2} EPnP {ee:.2}",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
    )
}

fn robustness() -> Verdict {
    let base = SceneConfig {
        n_points: 1000,
        noise_sigma_px: 1.0,
        ..Default::default()
    };
    let records = run_outlier_sweep(&[0.1], 100, &base, &RansacConfig::default(), true).unwrap();
    let plain = metrics(record(&records, Method::RansacAepnp));
    let refined = metrics(record(&records, Method::RansacAepnpRefined));
    let pass = plain[0] < 1.0 && plain[2] < 0.05 && plain[3] < 0.05 && (0..4).all(|k| refined[k] <= plain[k]);
    verdict(pass, format!("RANSAC {}; refined {}", fmt4(plain), fmt4(refined)))
}

fn sparse_keypoints() -> Verdict {
    let records = run_sparse_keypoint_protocol(7, 1.0, 300, 0).unwrap();
    let r = record(&records, Method::Aepnp);
    let m = metrics(r);
    let pass = m[0] < 10.0 && m[2] < 0.15 && m[3] < 0.15;
    verdict(pass, format!("{}, failures {:.3}", fmt4(m), r.failure_rate))
}

fn unit(seed: u64, i: u64) -> f64 {
    (derive_seed(seed, i) >> 11) as f64 / (1u64 << 53) as f64
}

fn gradient_check() -> Verdict {
    let mut worst = 0.0f64;
    for state in 0..100u64 {
        let scene = generate_scene(&SceneConfig {
            n_points: 10 + (state as usize % 5) * 20,
            noise_sigma_px: 1.0,
            seed: derive_seed(8, state),
            ..Default::default()
        })
        .unwrap();
        let delta = Increment::from_fn(|i, _| 0.1 * (unit(state, i as u64) - 0.5));
        let pose = apply_increment(&scene.truth, &delta);
        let k = SceneConfig::default().intrinsics;
        let (Ok(a), Ok(n)) = (
            jacobian(&pose, &scene.corrs, &k),
            numeric_jacobian(&pose, &scene.corrs, &k, 1e-6),
        ) else {
            return verdict(false, format!("state {state}: a point left the visible half-space"));
        };
        worst = worst.max((&a - &n).norm() / n.norm());
    }
    verdict(worst <= 1e-4, format!("worst relative Frobenius difference {worst:.2e} over 100 states"))
}

fn minimal_case() -> Verdict {
    let (mut exact, mut flagged, mut other, mut wrong) = (0, 0, 0, 0);
    let mut worst_wrong = 0.0f64;
    for i in 0..500u64 {
        let scene = generate_scene(&SceneConfig {
            n_points: 6,
            seed: derive_seed(9, i),
            ..Default::default()
        })
        .unwrap();
        match aepnp_solve(&scene.corrs) {
            Ok((pose, _)) => {
                let e = PoseErrors::between(&pose, &scene.truth).unwrap();
                if e.rotation_deg <= 1e-4 {
                    exact += 1;
                } else {
                    wrong += 1;
                    worst_wrong = worst_wrong.max(e.rotation_deg);
                }
            }
            Err(Error::RankDeficient { .. }) => flagged += 1,
            Err(_) => other += 1,
        }
    }
    verdict(
        exact >= 495 && wrong == 0 && other == 0,
        format!("{exact} exact, {flagged} flagged rank deficient, {other} other errors, {wrong} wrong (worst {worst_wrong:.2e} deg)"),
    )
}

fn run_cli(args: &[&str], out: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_aepnp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .unwrap();
    assert!(status.success(), "{args:?}");
    std::fs::read(out).unwrap()
}

/// Drops the last column (mean runtime) from every line.
fn without_runtime(csv: &[u8]) -> String {
    String::from_utf8_lossy(csv)
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let sweeps: [&[&str]; 4] = [
        &["sweep-noise", "--sigmas", "0,1,4", "--trials", "40", "--seed", "5"],
        &["sweep-count", "--counts", "6,16,128", "--trials", "40", "--seed", "5"],
        &["sweep-outliers", "--ratios", "0,0.3", "--n", "300", "--trials", "10", "--refine", "--seed", "5"],
        &["sparse-test", "--n", "7", "--trials", "60", "--seed", "5"],
    ];
    let mut mismatched = Vec::new();
    for args in sweeps {
        let a = run_cli(args, &dir.path().join("a.csv"));
        let b = run_cli(args, &dir.path().join("b.csv"));
        if a != b {
            mismatched.push(args[0]);
        }
    }
    let bench = ["bench-time", "--counts", "16,64", "--trials", "10", "--seed", "5"];
    let a = run_cli(&bench, &dir.path().join("a.csv"));
    let b = run_cli(&bench, &dir.path().join("b.csv"));
    if without_runtime(&a) != without_runtime(&b) {
        mismatched.push("bench-time");
    }
    let detail = if mismatched.is_empty() {
        "4 accuracy sweeps byte-identical; bench-time identical apart from measured runtime".to_string()
    } else {
        format!("differing output from {mismatched:?}")
    };
    verdict(mismatched.is_empty(), detail)
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("noise-free exactness", noise_free_exactness),
        ("baseline failure", baseline_failure),
        ("noise trend", noise_trend),
        ("count trend", count_trend),
        ("timing", timing),
        ("robustness", robustness),
        ("sparse keypoints", sparse_keypoints),
        ("gradient check", gradient_check),
        ("minimal case", minimal_case),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "acceptance {:>2} {:<22} {}  {}",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its verdict even when the others pass.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{perceptual_oracle, random_image};
use twinsynth::io::read_jsonl;
use twinsynth::metrics::{frechet_from_stats, FeatureVector, GaussianStats};
use twinsynth::par;
use twinsynth::pipeline::{
    build_dataset, dist_baseline, evaluate, random_baseline, synth_targets, ManifestRecord,
    PipelineConfig, ScenarioConfig, MANIFEST_FILE,
};
use twinsynth::{
    assets, fit_twin, perceptual_distance, sample_augmented, select_coreset, ssim, Attribute,
    AttributeVector, AugmentConfig, FitOptions, FitResult, RasterImage, RenderConfig, SearchSpace,
    SeedRule,
};

const RECOVERY_CASES: usize = 100;
const RECOVERY_MIN_EXACT: usize = 95;
const RECOVERY_LIMIT: Duration = Duration::from_secs(5 * 60);
const KCENTER_INSTANCES: usize = 200;
const SSIM_CONSTANT: f64 = 0.9231;
const SSIM_TOL: f64 = 1e-4;
const FRECHET_TOL: f64 = 1e-9;
const ORACLE_TOL: f64 = 1e-9;
const ORACLE_PAIRS: usize = 50;
const BAND_SAMPLES: usize = 100_000;
const BAND_RANGE: (f64, f64) = (0.93, 0.97);
const MIN_RELATIVE_GAP: f64 = 0.10;
const SCENARIO_LIMIT: Duration = Duration::from_secs(15 * 60);
const SWEEP_SLACK: f64 = 0.02;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn recovery_fits() -> (Vec<(AttributeVector, FitResult)>, Duration) {
    let cfg = RenderConfig::default();
    let mesh = assets::spindle();
    let space = SearchSpace::default();
    let options = FitOptions {
        max_epochs: 2,
        ..FitOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let fits = (0..RECOVERY_CASES)
        .map(|_| {
            let mut raw = [0.0; 6];
            for a in Attribute::ALL {
                let grid = &space.grid(a).values;
                raw[a.index()] = grid[rng.random_range(0..grid.len())];
            }
            let truth = AttributeVector::new(raw);
            let target = twinsynth::render(&mesh, &truth, &cfg).unwrap().0;
            let fit = fit_twin(&target, &mesh, &space, &cfg, &options, &space.midpoint()).unwrap();
            (truth, fit)
        })
        .collect();
    (fits, start.elapsed())
}

fn criterion_1(fits: &[(AttributeVector, FitResult)], elapsed: Duration) -> Verdict {
    let exact = fits
        .iter()
        .filter(|(truth, fit)| fit.psi_star == *truth && fit.final_loss == 0.0)
        .count();
    verdict(
        exact >= RECOVERY_MIN_EXACT && elapsed <= RECOVERY_LIMIT,
        format!(
            "{exact}/{} exact recoveries (need {RECOVERY_MIN_EXACT}), {:.1} s (limit {} s)",
            fits.len(),
            elapsed.as_secs_f64(),
            RECOVERY_LIMIT.as_secs()
        ),
    )
}

fn criterion_2(fits: &[(AttributeVector, FitResult)]) -> Verdict {
    let broken = fits
        .iter()
        .filter(|(_, fit)| {
            !fit.is_monotone() || fit.trace.last().is_some_and(|e| e.loss != fit.final_loss)
        })
        .count();
    let steps: usize = fits.iter().map(|(_, f)| f.trace.len()).sum();
    verdict(
        broken == 0,
        format!(
            "{broken} of {} traces rise ({steps} steps checked)",
            fits.len()
        ),
    )
}

fn brute_force_radius(points: &[FeatureVector], k: usize) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let radius = points
            .iter()
            .map(|p| {
                (0..n)
                    .filter(|&c| mask & (1 << c) != 0)
                    .map(|c| p.distance(&points[c]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        best = best.min(radius);
    }
    best
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut violations = 0;
    for _ in 0..KCENTER_INSTANCES {
        let k = rng.random_range(1..=3);
        let n = rng.random_range(k..=10);
        let dims = rng.random_range(1..=4);
        let points: Vec<FeatureVector> = (0..n)
            .map(|_| FeatureVector((0..dims).map(|_| rng.random_range(-10.0..10.0)).collect()))
            .collect();
        let greedy = select_coreset(&points, k, SeedRule::NearestToMean)
            .unwrap()
            .cover_radius;
        let optimum = brute_force_radius(&points, k);
        if greedy > 2.0 * optimum + 1e-12 {
            violations += 1;
        }
        if optimum > 0.0 {
            worst = worst.max(greedy / optimum);
        }
    }
    verdict(
        violations == 0,
        format!("{violations} of {KCENTER_INSTANCES} instances exceed twice the optimum (worst ratio {worst:.3})"),
    )
}

fn criterion_4() -> Verdict {
    let s = ssim(
        &RasterImage::filled(16, 16, [100; 3]),
        &RasterImage::filled(16, 16, [150; 3]),
    )
    .unwrap();
    let ssim_ok = (s - SSIM_CONSTANT).abs() <= SSIM_TOL;

    let unit = |mean: f64| GaussianStats {
        mean: DVector::from_element(1, mean),
        covariance: DMatrix::from_element(1, 1, 1.0),
    };
    let f = frechet_from_stats(&unit(0.0), &unit(1.0)).unwrap();
    let frechet_ok = (f - 1.0).abs() <= FRECHET_TOL;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..ORACLE_PAIRS {
        let (w, h) = (rng.random_range(2..=8), rng.random_range(2..=8));
        let a = random_image(&mut rng, w, h);
        let b = random_image(&mut rng, w, h);
        worst = worst.max((perceptual_distance(&a, &b).unwrap() - perceptual_oracle(&a, &b)).abs());
    }
    let oracle_ok = worst <= ORACLE_TOL;
    verdict(
        ssim_ok && frechet_ok && oracle_ok,
        format!("ssim {s:.6} (want {SSIM_CONSTANT} ± {SSIM_TOL:e}), frechet {f:.12} (want 1 ± {FRECHET_TOL:e}), perceptual vs oracle max gap {worst:.2e} over {ORACLE_PAIRS} pairs"),
    )
}

fn criterion_5() -> Verdict {
    // mid-range twin: no linear coordinate comes near a clamp boundary
    let twin = AttributeVector::new([180.0, 180.0, 50.0, 50.0, 180.0, 50.0]);
    let aug = AugmentConfig {
        n: BAND_SAMPLES,
        seed: 5,
        ..AugmentConfig::default()
    };
    let samples = sample_augmented(&[twin], &aug).unwrap();
    let mut fractions = Vec::new();
    for a in Attribute::ALL {
        let band = aug.deviation_fraction * a.span();
        let centre = twin.get(a);
        let inside = samples
            .iter()
            .filter(|s| {
                let d = (s.psi.get(a) - centre).abs();
                let d = if a.is_angular() { d.min(360.0 - d) } else { d };
                d <= band
            })
            .count();
        fractions.push(inside as f64 / samples.len() as f64);
    }
    let ok = fractions
        .iter()
        .all(|f| (BAND_RANGE.0..=BAND_RANGE.1).contains(f));
    let shown: Vec<String> = fractions.iter().map(|f| format!("{f:.4}")).collect();
    verdict(
        ok,
        format!(
            "in-band fractions [{}] (want {}..{})",
            shown.join(", "),
            BAND_RANGE.0,
            BAND_RANGE.1
        ),
    )
}

struct Scenario {
    dir: tempfile::TempDir,
    cfg: PipelineConfig,
    build: f64,
    dist: f64,
    random: f64,
    elapsed: Duration,
}

fn ffd_of(manifest: &twinsynth::pipeline::DatasetManifest, cfg: &PipelineConfig) -> f64 {
    evaluate(manifest, &cfg.targets_dir).unwrap().ffd
}

fn run_scenario() -> Scenario {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let mut cfg = synth_targets(dir.path(), &ScenarioConfig::default()).unwrap();
    cfg.coreset_per_class = 8;
    cfg.augment.n = 600;
    let build = ffd_of(&build_dataset(&cfg).unwrap().manifest, &cfg);
    let dist = ffd_of(&dist_baseline(&cfg).unwrap(), &cfg);
    let random = ffd_of(&random_baseline(&cfg).unwrap(), &cfg);
    Scenario {
        elapsed: start.elapsed(),
        dir,
        cfg,
        build,
        dist,
        random,
    }
}

fn criterion_6(s: &Scenario) -> Verdict {
    let gap_dist = (s.dist - s.build) / s.dist;
    let gap_random = (s.random - s.dist) / s.random;
    verdict(
        gap_dist >= MIN_RELATIVE_GAP && gap_random >= MIN_RELATIVE_GAP && s.elapsed <= SCENARIO_LIMIT,
        format!(
            "FFD build {:.4} < dist {:.4} ({:.1}% gap) < random {:.4} ({:.1}% gap), need {:.0}% gaps; {:.1} s (limit {} s)",
            s.build,
            s.dist,
            100.0 * gap_dist,
            s.random,
            100.0 * gap_random,
            100.0 * MIN_RELATIVE_GAP,
            s.elapsed.as_secs_f64(),
            SCENARIO_LIMIT.as_secs()
        ),
    )
}

fn output_files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let records: Vec<ManifestRecord> = read_jsonl(&root.join(MANIFEST_FILE)).unwrap();
    std::iter::once(PathBuf::from(MANIFEST_FILE))
        .chain(records.into_iter().map(|r| PathBuf::from(r.image_path)))
        .map(|rel| {
            let bytes = std::fs::read(root.join(&rel)).unwrap();
            (rel, bytes)
        })
        .collect()
}

fn criterion_7(s: &Scenario) -> Verdict {
    let reference = output_files(&s.cfg.output_dir);
    let mut mismatches = Vec::new();
    for (name, workers) in [
        ("rerun", None),
        ("one-worker", Some(1)),
        ("four-workers", Some(4)),
    ] {
        let mut cfg = s.cfg.clone();
        cfg.output_dir = s.dir.path().join(name);
        par::with_workers(workers, || build_dataset(&cfg)).unwrap();
        if output_files(&cfg.output_dir) != reference {
            mismatches.push(name);
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "manifest and {} images compared across rerun, 1 and 4 workers; mismatching runs: {:?}",
            reference.len() - 1,
            mismatches
        ),
    )
}

fn non_increasing(values: &[f64]) -> bool {
    values
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + SWEEP_SLACK))
}

fn criterion_8(s: &Scenario) -> Verdict {
    let sweep = |o: usize, n: usize| {
        if (o, n) == (8, 600) {
            return s.build;
        }
        let mut cfg = s.cfg.clone();
        cfg.coreset_per_class = o;
        cfg.augment.n = n;
        cfg.output_dir = s.dir.path().join(format!("sweep-o{o}-n{n}"));
        ffd_of(&build_dataset(&cfg).unwrap().manifest, &cfg)
    };
    let by_o: Vec<f64> = [2, 4, 8].iter().map(|&o| sweep(o, 600)).collect();
    let by_n: Vec<f64> = [150, 300, 600].iter().map(|&n| sweep(8, n)).collect();
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(" -> ")
    };
    let (o_ok, n_ok) = (non_increasing(&by_o), non_increasing(&by_n));
    let mark = |ok: bool| if ok { "ok" } else { "rises" };
    verdict(
        o_ok && n_ok,
        format!(
            "FFD over O=2,4,8: {} ({}); over N=150,300,600: {} ({}); slack {:.0}% per step",
            fmt(&by_o),
            mark(o_ok),
            fmt(&by_n),
            mark(n_ok),
            100.0 * SWEEP_SLACK
        ),
    )
}

fn report(number: usize, title: &str, v: &Verdict) -> bool {
    let word = if v.pass { "PASS" } else { "FAIL" };
    println!("criterion {number} {word}: {title}: {}", v.detail);
    v.pass
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters from the harness are not supported
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut results = Vec::new();
    let (fits, elapsed) = recovery_fits();
    results.push(report(
        1,
        "twin recovery on the spindle",
        &criterion_1(&fits, elapsed),
    ));
    results.push(report(
        2,
        "coordinate descent monotone",
        &criterion_2(&fits),
    ));
    results.push(report(
        3,
        "greedy k-center within twice optimum",
        &criterion_3(),
    ));
    results.push(report(4, "metric closed forms and oracle", &criterion_4()));
    results.push(report(5, "augmentation band coverage", &criterion_5()));
    let scenario = run_scenario();
    results.push(report(
        6,
        "bimodal scenario ordering",
        &criterion_6(&scenario),
    ));
    results.push(report(7, "byte-identical reruns", &criterion_7(&scenario)));
    results.push(report(
        8,
        "FFD sweeps over O and N",
        &criterion_8(&scenario),
    ));
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

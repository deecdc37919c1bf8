//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rssiloc_core::cluster::kappa_from_extent;
use rssiloc_core::estimator::best_of;
use rssiloc_core::geo::{GeoPoint, PlanarPoint};
use rssiloc_core::lateration::{build_system, solve_svd, Anchor, LinearSystem};
use rssiloc_core::pathloss::{friis_rssi, rssi_to_distance, Calibration, TxParams};
use rssiloc_core::simulator::{self, SimScenario};
use rssiloc_core::{cluster, Estimator, EstimatorConfig, IterationResult, Observation, RThreshPolicy};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn within(limit: Duration, start: Instant) -> (bool, f64) {
    let secs = start.elapsed().as_secs_f64();
    (secs < limit.as_secs_f64(), secs)
}

fn exact_recovery() -> Outcome {
    let start = Instant::now();
    let mut sc = SimScenario::gtu_sim(7);
    sc.sigma_db = 0.0;
    let sim = simulator::simulate_observations(&sc, 600.0).unwrap();
    let cal = sc.matched_calibration(100.0).unwrap();
    let mut cfg = EstimatorConfig::new(130.0, cal);
    cfg.seed = 7;
    let est = Estimator::run(cfg, &sim.observations).unwrap();
    let pipeline = est.best_estimate().map(|(g, _)| simulator::evaluate(g, sc.target));
    let baseline = simulator::run_baseline_svd(&sim.observations, &cal, sim.observations[0].pos)
        .map(|e| simulator::evaluate(e.geo, sc.target));
    let (fast, secs) = within(Duration::from_secs(5), start);
    match (pipeline, baseline) {
        (Ok(p), Ok(b)) => outcome(
            sim.observations.len() == 600 && p < 1.0 && b < 1.0 && fast,
            format!(
                "n_obs={} pipeline={p:.3} m baseline={b:.3} m ({secs:.2} s)",
                sim.observations.len()
            ),
        ),
        (p, b) => outcome(false, format!("pipeline={p:?} baseline={b:?}")),
    }
}

/// Runs criterion 2 and hands every estimator history to criterion 3.
fn directional_claim(histories: &mut Vec<Vec<IterationResult>>) -> Outcome {
    let start = Instant::now();
    let mut pipeline = Vec::new();
    let mut baseline = Vec::new();
    for seed in 0..20u64 {
        let sc = SimScenario::gtu_sim(seed);
        let sim = simulator::simulate_observations(&sc, sc.plan.nominal_duration()).unwrap();
        let mut cfg = EstimatorConfig::new(130.0, sc.matched_calibration(100.0).unwrap());
        cfg.seed = seed;
        let est = Estimator::run(cfg, &sim.observations).unwrap();
        pipeline.push(
            est.best_estimate()
                .map(|(g, _)| simulator::evaluate(g, sc.target))
                .unwrap_or(f64::INFINITY),
        );
        baseline.push(
            simulator::run_baseline_svd(&sim.observations, &cfg.cal, sim.observations[0].pos)
                .map(|e| simulator::evaluate(e.geo, sc.target))
                .unwrap_or(f64::INFINITY),
        );
        histories.push(est.history().to_vec());
    }
    let p = median(&mut pipeline);
    let b = median(&mut baseline);
    let (fast, secs) = within(Duration::from_secs(60), start);
    outcome(
        p < b && p <= 25.0 && fast,
        format!("median pipeline={p:.1} m baseline={b:.1} m over 20 seeds ({secs:.2} s)"),
    )
}

fn min_residual_selection(mut histories: Vec<Vec<IterationResult>>) -> Outcome {
    // Widen the pool beyond criterion 2 with other scales and noise levels.
    for (seed, ma, sigma) in [
        (100u64, 50.0, 3.0),
        (101, 90.0, 6.0),
        (102, 190.0, 1.0),
        (103, 20.0, 3.0),
    ] {
        let mut sc = SimScenario::gtu_sim(seed);
        sc.sigma_db = sigma;
        let sim = simulator::simulate_observations(&sc, 700.0).unwrap();
        let mut cfg = EstimatorConfig::new(ma, sc.matched_calibration(100.0).unwrap());
        cfg.r_thresh = RThreshPolicy::Constant(0);
        cfg.seed = seed;
        histories.push(Estimator::run(cfg, &sim.observations).unwrap().history().to_vec());
    }
    let mut checked = 0;
    for h in &histories {
        let scan = h
            .iter()
            .filter(|it| it.is_ok())
            .fold(None::<&IterationResult>, |best, it| match best {
                Some(b) if b.residual_rms.unwrap() <= it.residual_rms.unwrap() => Some(b),
                _ => Some(it),
            });
        let agrees = match (best_of(h), scan) {
            (Ok((geo, got)), Some(want)) => got.index == want.index && Some(geo) == want.estimate,
            (Err(_), None) => true,
            _ => false,
        };
        if !agrees {
            return outcome(false, format!("disagreement in run {checked}"));
        }
        checked += 1;
    }
    outcome(true, format!("{checked} runs scanned"))
}

/// Sum of squared range residuals.
fn range_cost(anchors: &[Anchor], x: f64, y: f64) -> f64 {
    anchors
        .iter()
        .map(|a| {
            let r = (x - a.pos.x).hypot(y - a.pos.y) - a.distance;
            r * r
        })
        .sum()
}

/// Coarse grid over the anchor bounding box, then shrinking local grids.
fn grid_oracle(anchors: &[Anchor]) -> (f64, f64) {
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for a in anchors {
        lo_x = lo_x.min(a.pos.x - a.distance);
        hi_x = hi_x.max(a.pos.x + a.distance);
        lo_y = lo_y.min(a.pos.y - a.distance);
        hi_y = hi_y.max(a.pos.y + a.distance);
    }
    const STEPS: usize = 200;
    let mut step = ((hi_x - lo_x).max(hi_y - lo_y)) / STEPS as f64;
    let mut best = (lo_x, lo_y, f64::INFINITY);
    for i in 0..=STEPS {
        for j in 0..=STEPS {
            let (x, y) = (lo_x + i as f64 * step, lo_y + j as f64 * step);
            let c = range_cost(anchors, x, y);
            if c < best.2 {
                best = (x, y, c);
            }
        }
    }
    while step > 1e-7 {
        let (cx, cy) = (best.0, best.1);
        for i in -10..=10 {
            for j in -10..=10 {
                let (x, y) = (cx + i as f64 * step / 5.0, cy + j as f64 * step / 5.0);
                let c = range_cost(anchors, x, y);
                if c < best.2 {
                    best = (x, y, c);
                }
            }
        }
        step /= 5.0;
    }
    (best.0, best.1)
}

fn linear_residual(sys: &LinearSystem, x: f64, y: f64) -> f64 {
    let v = nalgebra::DVector::from_vec(vec![x * x + y * y, x, y]);
    (&sys.a * v - &sys.b).norm() / (sys.rows() as f64).sqrt()
}

fn lateration_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    let (mut worst_exact, mut noisy_violations) = (0.0f64, 0);
    for _ in 0..50 {
        let m = rng.random_range(4..=8usize);
        let target = PlanarPoint::new(rng.random_range(-400.0..400.0), rng.random_range(-400.0..400.0));
        let mut anchors: Vec<Anchor> = (0..m)
            .map(|_| {
                let p = PlanarPoint::new(rng.random_range(-1000.0..1000.0), rng.random_range(-1000.0..1000.0));
                Anchor::new(p, p.distance(&target))
            })
            .collect();

        let sys = build_system(&anchors).unwrap();
        let sol = solve_svd(&sys).unwrap();
        let (ox, oy) = grid_oracle(&anchors);
        worst_exact = worst_exact.max((sol.x - ox).hypot(sol.y - oy));

        for a in &mut anchors {
            a.distance = (a.distance * rng.random_range(0.8..1.2)).max(1.0);
        }
        let sys = build_system(&anchors).unwrap();
        let sol = solve_svd(&sys).unwrap();
        let (ox, oy) = grid_oracle(&anchors);
        let oracle_res = linear_residual(&sys, ox, oy);
        if sol.residual_rms > oracle_res * (1.0 + 1e-9) + 1e-9 {
            noisy_violations += 1;
        }
    }
    let (fast, secs) = within(Duration::from_secs(10), start);
    outcome(
        worst_exact < 1e-3 && noisy_violations == 0 && fast,
        format!("worst exact gap={worst_exact:.2e} m, noisy violations={noisy_violations} ({secs:.2} s)"),
    )
}

fn pathloss_round_trip() -> Outcome {
    let tx = TxParams::isotropic(20.0, 435e6).unwrap();
    let cal = Calibration::free_space(&tx, 1.0, 0.0).unwrap();
    let mut worst = 0.0f64;
    const N: usize = 10_000;
    for i in 0..=N {
        let d = 10.0 * 1000f64.powf(i as f64 / N as f64);
        let back = rssi_to_distance(friis_rssi(&tx, d).unwrap(), &cal);
        worst = worst.max(((back - d) / d).abs());
    }
    outcome(
        worst <= 1e-9,
        format!("worst relative error={worst:.2e} over {} distances", N + 1),
    )
}

fn kappa_table() -> Outcome {
    let single = Observation::new(0.0, GeoPoint::new(40.8, 29.35).unwrap(), -60.0).unwrap();
    let cases = [
        (kappa_from_extent(650.0, 130.0, 100), 5),
        (kappa_from_extent(651.0, 130.0, 100), 6),
        (cluster::compute_k(&[single], 130.0).unwrap(), 1),
    ];
    let got: Vec<usize> = cases.iter().map(|c| c.0).collect();
    outcome(
        cases.iter().all(|(g, w)| g == w),
        format!("got {got:?}, want [5, 6, 1]"),
    )
}

fn rssiloc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rssiloc"))
        .args(args)
        .output()
        .expect("run rssiloc")
}

fn scratch_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rssiloc-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sweep_shape(dir: &Path) -> Outcome {
    let log = dir.join("sweep.csv");
    let sim = rssiloc(&[
        "simulate",
        "--scenario",
        "gtu-sim",
        "--seed",
        "11",
        "--out",
        path_str(&log),
    ]);
    if !sim.status.success() {
        return outcome(false, String::from_utf8_lossy(&sim.stderr).trim().to_string());
    }
    let out = rssiloc(&[
        "sweep-ma",
        "--obs",
        path_str(&log),
        "--truth",
        "40.8065,29.3589",
        "--seed",
        "11",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    let errors: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap_or(""))
        .collect();
    let distinct = {
        let mut e = errors.clone();
        e.sort();
        e.dedup();
        e.len()
    };
    outcome(
        out.status.success() && errors.len() == 8 && distinct > 1 && errors.iter().all(|e| !e.is_empty()),
        format!("{} rows, {distinct} distinct errors", errors.len()),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let mut artifacts = Vec::new();
    for run in 0..2 {
        let log = dir.join(format!("det-{run}.csv"));
        let report = dir.join(format!("det-{run}.json"));
        let sim = rssiloc(&["simulate", "--seed", "5", "--out", path_str(&log)]);
        let est = rssiloc(&[
            "estimate",
            "--obs",
            path_str(&log),
            "--seed",
            "5",
            "--baseline",
            "--truth",
            "40.8065,29.3589",
            "--out",
            path_str(&report),
        ]);
        if !sim.status.success() || est.status.code() == Some(1) || est.status.code() == Some(2) {
            return outcome(
                false,
                format!("run {run} failed: {}", String::from_utf8_lossy(&est.stderr).trim()),
            );
        }
        artifacts.push((std::fs::read(&log).unwrap(), std::fs::read(&report).unwrap()));
    }
    let same = artifacts[0] == artifacts[1];
    outcome(
        same,
        format!(
            "log {} bytes, report {} bytes, identical={same}",
            artifacts[0].0.len(),
            artifacts[0].1.len()
        ),
    )
}

fn main() {
    let dir = scratch_dir();
    let mut histories = Vec::new();
    let results = [
        ("1 exact-recovery", exact_recovery()),
        ("2 gtu-sim directional claim", directional_claim(&mut histories)),
        ("3 min-residual selection", min_residual_selection(histories)),
        ("4 lateration vs grid oracle", lateration_oracle()),
        ("5 path-loss round trip", pathloss_round_trip()),
        ("6 kappa table", kappa_table()),
        ("7 ma sweep shape", sweep_shape(&dir)),
        ("8 determinism", determinism(&dir)),
    ];
    let _ = std::fs::remove_dir_all(&dir);

    let mut failed = 0;
    for (name, r) in &results {
        println!("{} {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Shared fixtures for the criterion benchmarks.

use rssiloc_core::geo::PlanarPoint;
use rssiloc_core::lateration::{build_system, Anchor, LinearSystem};
use rssiloc_core::simulator::{self, SimScenario};
use rssiloc_core::{EstimatorConfig, Observation};

/// One full pass of the `gtu-sim` survey with its matched calibration.
pub fn survey(seed: u64) -> (Vec<Observation>, EstimatorConfig) {
    let sc = SimScenario::gtu_sim(seed);
    let sim = simulator::simulate_observations(&sc, sc.plan.nominal_duration()).expect("valid preset");
    let mut cfg = EstimatorConfig::new(130.0, sc.matched_calibration(100.0).expect("valid preset"));
    cfg.seed = seed;
    (sim.observations, cfg)
}

/// `n` points on a jittered grid, roughly 2 km across.
pub fn grid_points(n: usize) -> Vec<PlanarPoint> {
    let side = (n as f64).sqrt().ceil() as usize;
    (0..n)
        .map(|i| {
            let (r, c) = ((i / side) as f64, (i % side) as f64);
            let jitter = ((i * 7919) % 97) as f64 / 97.0;
            PlanarPoint::new(
                c * 2000.0 / side as f64 + 5.0 * jitter,
                r * 2000.0 / side as f64 - 3.0 * jitter,
            )
        })
        .collect()
}

/// Lateration system over `m` anchors on a ring around a fixed target.
pub fn ring_system(m: usize) -> LinearSystem {
    let target = PlanarPoint::new(120.0, -80.0);
    let anchors: Vec<Anchor> = (0..m)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / m as f64;
            let p = PlanarPoint::new(900.0 * a.cos(), 700.0 * a.sin());
            Anchor::new(p, p.distance(&target) * (1.0 + 0.01 * (i % 5) as f64))
        })
        .collect();
    build_system(&anchors).expect("enough anchors")
}

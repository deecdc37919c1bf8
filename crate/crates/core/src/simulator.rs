//! Kinematic survey-flight simulator.
//!
//! A receiver flies a loiter circle or a lawnmower pattern at constant speed
//! and samples the free-space received power of a fixed transmitter plus
//! log-normal shadowing at a fixed cadence. Also hosts the plain
//! all-observations baseline and the `ma` sensitivity sweep.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{Observation, ReferenceNode};
use crate::error::{Error, Result};
use crate::estimator::{Estimator, EstimatorConfig};
use crate::geo::{self, GeoPoint, PlanarPoint};
use crate::lateration::{self, PositionEstimate};
use crate::pathloss::{self, rssi_to_distance, Calibration, TxParams};

/// Sensor limits used when quantization is enabled.
pub const SENSOR_MIN_DBM: f64 = -120.0;
pub const SENSOR_MAX_DBM: f64 = -10.0;
pub const SENSOR_STEP_DB: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FlightPlan {
    /// Counter-clockwise circle starting due east of `center`.
    Loiter {
        center: GeoPoint,
        radius_m: f64,
        turns: f64,
        speed: f64,
    },
    /// North/south lanes across a `width_m` x `height_m` rectangle centred on
    /// `center`, starting at its south-west corner. Lane spacing is shrunk
    /// as needed so the outermost lanes sit on the rectangle's edges.
    Lawnmower {
        center: GeoPoint,
        width_m: f64,
        height_m: f64,
        spacing_m: f64,
        speed: f64,
    },
}

impl FlightPlan {
    pub fn center(&self) -> GeoPoint {
        match *self {
            FlightPlan::Loiter { center, .. } | FlightPlan::Lawnmower { center, .. } => center,
        }
    }

    pub fn speed(&self) -> f64 {
        match *self {
            FlightPlan::Loiter { speed, .. } | FlightPlan::Lawnmower { speed, .. } => speed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let speed = self.speed();
        if !(speed > 1.0 && speed <= 60.0) {
            return Err(Error::InvalidArgument(format!("speed {speed} m/s outside (1, 60]")));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            FlightPlan::Loiter { radius_m, turns, .. } => {
                positive("radius", radius_m)?;
                positive("turns", turns)
            }
            FlightPlan::Lawnmower {
                width_m,
                height_m,
                spacing_m,
                ..
            } => {
                positive("width", width_m)?;
                positive("height", height_m)?;
                positive("lane spacing", spacing_m)
            }
        }
    }

    /// Length of one pass over the plan, in meters.
    pub fn path_length(&self) -> f64 {
        match *self {
            FlightPlan::Loiter { radius_m, turns, .. } => 2.0 * std::f64::consts::PI * radius_m * turns,
            FlightPlan::Lawnmower { .. } => polyline_length(&self.lawnmower_waypoints()),
        }
    }

    /// Time to fly one pass.
    pub fn nominal_duration(&self) -> f64 {
        self.path_length() / self.speed()
    }

    fn lawnmower_waypoints(&self) -> Vec<PlanarPoint> {
        let FlightPlan::Lawnmower {
            width_m,
            height_m,
            spacing_m,
            ..
        } = *self
        else {
            return Vec::new();
        };
        let intervals = (width_m / spacing_m).ceil().max(1.0) as usize;
        let step = width_m / intervals as f64;
        let (x0, y0, y1) = (-width_m / 2.0, -height_m / 2.0, height_m / 2.0);
        let mut pts = Vec::with_capacity(2 * (intervals + 1));
        for lane in 0..=intervals {
            let x = x0 + lane as f64 * step;
            let (a, b) = if lane % 2 == 0 { (y0, y1) } else { (y1, y0) };
            pts.push(PlanarPoint::new(x, a));
            pts.push(PlanarPoint::new(x, b));
        }
        pts
    }

    /// Planar offset from the plan center after flying `s` meters.
    fn position_at(&self, s: f64, waypoints: &[PlanarPoint]) -> PlanarPoint {
        match *self {
            FlightPlan::Loiter { radius_m, .. } => {
                let theta = s / radius_m;
                PlanarPoint::new(radius_m * theta.cos(), radius_m * theta.sin())
            }
            FlightPlan::Lawnmower { .. } => {
                // Past the end, fly the pattern back in reverse.
                let total = polyline_length(waypoints);
                let u = s.rem_euclid(2.0 * total);
                let u = if u > total { 2.0 * total - u } else { u };
                point_along(waypoints, u)
            }
        }
    }
}

fn polyline_length(pts: &[PlanarPoint]) -> f64 {
    pts.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

fn point_along(pts: &[PlanarPoint], mut s: f64) -> PlanarPoint {
    for w in pts.windows(2) {
        let seg = w[0].distance(&w[1]);
        if s <= seg && seg > 0.0 {
            let f = s / seg;
            return PlanarPoint::new(w[0].x + f * (w[1].x - w[0].x), w[0].y + f * (w[1].y - w[0].y));
        }
        s -= seg;
    }
    *pts.last().expect("lawnmower has waypoints")
}

/// Positions sampled every `dt` seconds over `duration`; at least the start
/// point is always returned.
pub fn generate_trajectory(plan: &FlightPlan, duration: f64, dt: f64) -> Result<Vec<(f64, GeoPoint)>> {
    plan.validate()?;
    if !(duration > 0.0) || !(dt > 0.0) || !duration.is_finite() || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "duration ({duration}) and dt ({dt}) must be positive"
        )));
    }
    let count = ((duration / dt + 1e-9).floor() as usize).max(1);
    let waypoints = plan.lawnmower_waypoints();
    let center = plan.center();
    let speed = plan.speed();
    Ok((0..count)
        .map(|i| {
            let t = i as f64 * dt;
            let q = plan.position_at(speed * t, &waypoints);
            (t, geo::unproject(center, q))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub plan: FlightPlan,
    pub target: GeoPoint,
    pub tx: TxParams,
    pub sigma_db: f64,
    pub seed: u64,
    pub sample_period: f64,
    /// Round to 0.5 dB and clamp to the sensor range.
    pub quantize: bool,
}

impl SimScenario {
    pub const PRESETS: [&'static str; 2] = ["gtu-sim", "calib-loiter"];

    /// Lawnmower over a 2000 m x 1570 m (3.14 km^2) campus-scale area with a
    /// 20 dBm, 435 MHz transmitter inside it.
    pub fn gtu_sim(seed: u64) -> Self {
        Self {
            plan: FlightPlan::Lawnmower {
                center: Self::gtu_target(),
                width_m: 2000.0,
                height_m: 1570.0,
                spacing_m: 200.0,
                speed: 22.0,
            },
            target: Self::gtu_target(),
            tx: TxParams::isotropic(20.0, 435e6).expect("valid preset"),
            sigma_db: 3.0,
            seed,
            sample_period: 1.0,
            quantize: false,
        }
    }

    /// Reference flight for calibration: two loiter turns around a point
    /// 300 m from the transmitter, spanning roughly 50 m to 550 m of range.
    pub fn calib_loiter(seed: u64) -> Self {
        let target = Self::gtu_target();
        let center = geo::unproject(target, PlanarPoint::new(300.0, 0.0));
        Self {
            plan: FlightPlan::Loiter {
                center,
                radius_m: 250.0,
                turns: 2.0,
                speed: 22.0,
            },
            ..Self::gtu_sim(seed)
        }
    }

    pub fn gtu_target() -> GeoPoint {
        GeoPoint {
            lat: 40.8065,
            lon: 29.3589,
        }
    }

    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        match name {
            "gtu-sim" => Some(Self::gtu_sim(seed)),
            "calib-loiter" => Some(Self::calib_loiter(seed)),
            _ => None,
        }
    }

    /// Free-space calibration consistent with this scenario's transmitter.
    pub fn matched_calibration(&self, d0: f64) -> Result<Calibration> {
        Calibration::free_space(&self.tx, d0, self.sigma_db)
    }

    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        if !(self.sample_period > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample period must be positive, got {}",
                self.sample_period
            )));
        }
        if !(self.sigma_db >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be non-negative, got {}",
                self.sigma_db
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub observations: Vec<Observation>,
    /// Samples dropped because the receiver sat exactly on the transmitter.
    pub skipped: usize,
}

pub fn simulate_observations(sc: &SimScenario, duration: f64) -> Result<SimOutput> {
    sc.validate()?;
    let trajectory = generate_trajectory(&sc.plan, duration, sc.sample_period)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut observations = Vec::with_capacity(trajectory.len());
    let mut skipped = 0;
    for (t, pos) in trajectory {
        let d = geo::haversine(pos, sc.target);
        if d == 0.0 {
            skipped += 1;
            continue;
        }
        let mut rssi = pathloss::sample_shadowed_rssi(&sc.tx, d, sc.sigma_db, &mut rng)?;
        if sc.quantize {
            rssi = ((rssi / SENSOR_STEP_DB).round() * SENSOR_STEP_DB).clamp(SENSOR_MIN_DBM, SENSOR_MAX_DBM);
        }
        observations.push(Observation::new(t, pos, rssi)?);
    }
    Ok(SimOutput { observations, skipped })
}

/// Haversine error of an estimate against ground truth.
pub fn evaluate(estimate: GeoPoint, truth: GeoPoint) -> f64 {
    geo::haversine(estimate, truth)
}

/// Multilateration over every observation, without thresholding or
/// clustering.
pub fn run_baseline_svd(obs: &[Observation], cal: &Calibration, origin: GeoPoint) -> Result<PositionEstimate> {
    let refs: Vec<ReferenceNode> = obs
        .iter()
        .map(|o| {
            Ok(ReferenceNode {
                pos_planar: geo::project(origin, o.pos)?,
                pos_geo: o.pos,
                rssi: o.rssi,
                distance: rssi_to_distance(o.rssi, cal),
            })
        })
        .collect::<Result<_>>()?;
    lateration::estimate_position(&refs, origin)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ma: f64,
    /// `None` when no iteration produced an estimate.
    pub error_m: Option<f64>,
    pub best_iteration: Option<usize>,
}

/// Runs the estimator once per `ma` value over the same observation log.
pub fn sweep_ma_log(
    obs: &[Observation],
    truth: GeoPoint,
    ma_values: &[f64],
    template: &EstimatorConfig,
) -> Result<Vec<SweepRow>> {
    if ma_values.is_empty() {
        return Err(Error::InvalidArgument("no ma values to sweep".into()));
    }
    ma_values
        .iter()
        .map(|&ma| {
            let est = Estimator::run(EstimatorConfig { ma, ..*template }, obs)?;
            let best = est.best_estimate().ok();
            Ok(SweepRow {
                ma,
                error_m: best.map(|(g, _)| evaluate(g, truth)),
                best_iteration: best.map(|(_, it)| it.index),
            })
        })
        .collect()
}

/// Simulates `sc` once and sweeps `ma` over the resulting log.
pub fn sweep_ma(
    sc: &SimScenario,
    duration: f64,
    ma_values: &[f64],
    template: &EstimatorConfig,
) -> Result<Vec<SweepRow>> {
    let sim = simulate_observations(sc, duration)?;
    sweep_ma_log(&sim.observations, sc.target, ma_values, template)
}

/// Clustered-pipeline and baseline errors for one simulated survey.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub pipeline_error_m: Option<f64>,
    pub baseline_error_m: Option<f64>,
    pub best_iteration: Option<usize>,
}

pub fn run_trial(sc: &SimScenario, duration: f64, cfg: &EstimatorConfig) -> Result<TrialOutcome> {
    let sim = simulate_observations(sc, duration)?;
    let est = Estimator::run(*cfg, &sim.observations)?;
    let best = est.best_estimate().ok();
    let baseline = est
        .origin()
        .and_then(|origin| run_baseline_svd(&sim.observations, &cfg.cal, origin).ok());
    Ok(TrialOutcome {
        pipeline_error_m: best.map(|(g, _)| evaluate(g, sc.target)),
        baseline_error_m: baseline.map(|b| evaluate(b.geo, sc.target)),
        best_iteration: best.map(|(_, it)| it.index),
    })
}

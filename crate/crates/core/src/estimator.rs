//! Iterative single-receiver localization.
//!
//! Observations are ingested in time order. Every `batch_size` samples the
//! full pipeline runs over *all* observations collected so far:
//! threshold, choose the cluster count from the survey extent, K-means,
//! drop sparse clusters, keep the strongest sample per cluster, and solve the
//! linearized multilateration. The reported position comes from the
//! iteration whose solve has the smallest RMS residual.

use serde::{Deserialize, Serialize};

use crate::cluster::{self, Observation};
use crate::error::{Error, Result};
use crate::geo::{self, GeoPoint, PlanarPoint};
use crate::lateration;
use crate::pathloss::Calibration;

/// How the minimum cluster size is chosen for each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy", content = "value")]
pub enum RThreshPolicy {
    /// Clusters need more than this many members in every iteration.
    Constant(usize),
    /// Clusters need more members than the 1-based iteration index.
    IterationIndex,
}

impl RThreshPolicy {
    pub fn threshold(&self, iteration: usize) -> usize {
        match *self {
            RThreshPolicy::Constant(k) => k,
            RThreshPolicy::IterationIndex => iteration,
        }
    }
}

impl std::fmt::Display for RThreshPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RThreshPolicy::Constant(k) => write!(f, "{k}"),
            RThreshPolicy::IterationIndex => f.write_str("iteration"),
        }
    }
}

impl std::str::FromStr for RThreshPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iteration" | "iter" => Ok(RThreshPolicy::IterationIndex),
            other => other.parse::<usize>().map(RThreshPolicy::Constant).map_err(|_| {
                Error::InvalidArgument(format!(
                    "r-thresh must be a non-negative integer or `iteration`, got `{other}`"
                ))
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Cluster scale in meters; the cluster count is `ceil(d_max / ma)`.
    pub ma: f64,
    pub batch_size: usize,
    pub min_dbm: Option<f64>,
    pub r_thresh: RThreshPolicy,
    pub seed: u64,
    pub cal: Calibration,
}

impl EstimatorConfig {
    pub const DEFAULT_BATCH: usize = 50;

    pub fn new(ma: f64, cal: Calibration) -> Self {
        Self {
            ma,
            batch_size: Self::DEFAULT_BATCH,
            min_dbm: None,
            r_thresh: RThreshPolicy::IterationIndex,
            seed: 0,
            cal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ma > 0.0) || !self.ma.is_finite() {
            return Err(Error::InvalidArgument(format!("ma must be positive, got {}", self.ma)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if let Some(min) = self.min_dbm {
            if min.is_nan() {
                return Err(Error::InvalidArgument("min-rssi is NaN".into()));
            }
        }
        Calibration::new(self.cal.d0, self.cal.p0_dbm, self.cal.n, self.cal.sigma_db)?;
        Ok(())
    }

    /// K-means seed for a given iteration.
    pub fn iteration_seed(&self, index: usize) -> u64 {
        splitmix64(self.seed ^ splitmix64(index as u64))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    NoObservations,
    InsufficientReferences,
    DegenerateGeometry,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SkipReason::NoObservations => "no-observations",
            SkipReason::InsufficientReferences => "insufficient-references",
            SkipReason::DegenerateGeometry => "degenerate-geometry",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "reason")]
pub enum IterationStatus {
    Ok,
    Skipped(SkipReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub index: usize,
    pub n_obs: usize,
    /// Cluster count before elimination.
    pub n_clusters: usize,
    pub n_clusters_used: usize,
    pub estimate: Option<GeoPoint>,
    pub residual_rms: Option<f64>,
    pub condition: Option<f64>,
    pub status: IterationStatus,
}

impl IterationResult {
    pub fn is_ok(&self) -> bool {
        self.status == IterationStatus::Ok
    }

    fn skipped(index: usize, n_obs: usize, n_clusters: usize, used: usize, reason: SkipReason) -> Self {
        Self {
            index,
            n_obs,
            n_clusters,
            n_clusters_used: used,
            estimate: None,
            residual_rms: None,
            condition: None,
            status: IterationStatus::Skipped(reason),
        }
    }
}

/// Owns the observation stream and the iteration history.
#[derive(Debug, Clone)]
pub struct Estimator {
    config: EstimatorConfig,
    observations: Vec<Observation>,
    history: Vec<IterationResult>,
}

impl Estimator {
    pub fn new(config: EstimatorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            observations: Vec::new(),
            history: Vec::new(),
        })
    }

    /// Feeds a whole log through [`Estimator::ingest`].
    pub fn run(config: EstimatorConfig, observations: &[Observation]) -> Result<Self> {
        let mut est = Self::new(config)?;
        for &o in observations {
            est.ingest(o)?;
        }
        Ok(est)
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn history(&self) -> &[IterationResult] {
        &self.history
    }

    /// Projection origin: the first observation's position.
    pub fn origin(&self) -> Option<GeoPoint> {
        self.observations.first().map(|o| o.pos)
    }

    /// Appends an observation, running an iteration whenever the count
    /// reaches a multiple of the batch size.
    pub fn ingest(&mut self, o: Observation) -> Result<Option<IterationResult>> {
        if let Some(last) = self.observations.last() {
            if o.t < last.t {
                return Err(Error::OutOfOrder {
                    previous: last.t,
                    got: o.t,
                });
            }
        }
        self.observations.push(o);
        if !self.observations.len().is_multiple_of(self.config.batch_size) {
            return Ok(None);
        }
        let result = self.run_iteration();
        self.history.push(result);
        Ok(Some(result))
    }

    /// Runs the pipeline over every observation seen so far, as iteration
    /// `history.len() + 1`. Does not modify the history.
    pub fn run_iteration(&self) -> IterationResult {
        let index = self.history.len() + 1;
        let n_obs = self.observations.len();
        let Some(origin) = self.origin() else {
            return IterationResult::skipped(index, 0, 0, 0, SkipReason::NoObservations);
        };
        let cfg = &self.config;

        let kept = cluster::threshold_rssi(&self.observations, cfg.min_dbm);
        if kept.is_empty() {
            return IterationResult::skipped(index, n_obs, 0, 0, SkipReason::NoObservations);
        }
        let k = cluster::compute_k(&kept, cfg.ma).expect("validated config and non-empty input");
        let points: Vec<PlanarPoint> = kept.iter().map(|o| geo::project_unchecked(origin, o.pos)).collect();
        let clusters = cluster::kmeans(&points, k, cfg.iteration_seed(index)).expect("k is clamped to the point count");
        let survivors = cluster::filter_clusters(clusters, cfg.r_thresh.threshold(index));
        let used = survivors.len();
        if used < 3 {
            return IterationResult::skipped(index, n_obs, k, used, SkipReason::InsufficientReferences);
        }
        let refs = cluster::select_reference_nodes(&survivors, &kept, &cfg.cal, origin);
        match lateration::estimate_position(&refs, origin) {
            Ok(est) => IterationResult {
                index,
                n_obs,
                n_clusters: k,
                n_clusters_used: used,
                estimate: Some(est.geo),
                residual_rms: Some(est.solution.residual_rms),
                condition: Some(est.solution.condition),
                status: IterationStatus::Ok,
            },
            Err(Error::InsufficientReferences { .. }) => {
                IterationResult::skipped(index, n_obs, k, used, SkipReason::InsufficientReferences)
            }
            Err(_) => IterationResult::skipped(index, n_obs, k, used, SkipReason::DegenerateGeometry),
        }
    }

    /// Estimate of the successful iteration with the smallest residual;
    /// ties go to the earliest iteration.
    pub fn best_estimate(&self) -> Result<(GeoPoint, &IterationResult)> {
        best_of(&self.history)
    }
}

/// Minimum-residual selection over an iteration history.
pub fn best_of(history: &[IterationResult]) -> Result<(GeoPoint, &IterationResult)> {
    let mut best: Option<(&IterationResult, f64)> = None;
    for it in history.iter().filter(|it| it.is_ok()) {
        let Some(r) = it.residual_rms else { continue };
        if best.is_none_or(|(_, b)| r < b) {
            best = Some((it, r));
        }
    }
    best.and_then(|(it, _)| it.estimate.map(|g| (g, it)))
        .ok_or(Error::NoEstimate)
}

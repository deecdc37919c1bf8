//! Reference-node selection: RSSI thresholding, spatial K-means over the
//! observation positions, small-cluster elimination and per-cluster
//! strongest-sample selection.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{self, GeoPoint, PlanarPoint};
use crate::lateration::Anchor;
use crate::pathloss::{rssi_to_distance, Calibration};

const MAX_LLOYD_ITERATIONS: usize = 100;
const CONVERGENCE_TOLERANCE_M: f64 = 1e-6;

/// One telemetry sample: time, receiver position and received power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub pos: GeoPoint,
    pub rssi: f64,
}

impl Observation {
    pub const RSSI_RANGE: std::ops::RangeInclusive<f64> = -200.0..=50.0;

    pub fn new(t: f64, pos: GeoPoint, rssi: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("non-finite timestamp {t}")));
        }
        if !Self::RSSI_RANGE.contains(&rssi) {
            return Err(Error::Domain(format!("rssi {rssi} dBm outside [-200, 50]")));
        }
        Ok(Self { t, pos, rssi })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub centroid: PlanarPoint,
    /// Indices into the clustered point list, ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Sum of squared distances from each member to its centroid.
    pub fn sse(&self, points: &[PlanarPoint]) -> f64 {
        self.clusters
            .iter()
            .flat_map(|c| c.members.iter().map(move |&i| points[i].distance_sq(&c.centroid)))
            .sum()
    }
}

/// A cluster representative used as a lateration anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceNode {
    pub pos_planar: PlanarPoint,
    pub pos_geo: GeoPoint,
    pub rssi: f64,
    pub distance: f64,
}

impl ReferenceNode {
    pub fn anchor(&self) -> Anchor {
        Anchor::new(self.pos_planar, self.distance)
    }
}

/// Keeps observations with `rssi >= min_dbm`; `None` disables the filter.
pub fn threshold_rssi(obs: &[Observation], min_dbm: Option<f64>) -> Vec<Observation> {
    match min_dbm {
        None => obs.to_vec(),
        Some(min) => obs.iter().copied().filter(|o| o.rssi >= min).collect(),
    }
}

/// Largest pairwise haversine distance among the observation positions.
pub fn max_pairwise_distance(obs: &[Observation]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in obs.iter().enumerate() {
        for b in &obs[i + 1..] {
            best = best.max(geo::haversine(a.pos, b.pos));
        }
    }
    best
}

/// Cluster count for a survey extent: `ceil(d_max / ma)` clamped to `[1, n]`.
pub fn kappa_from_extent(d_max: f64, ma: f64, n: usize) -> usize {
    let raw = (d_max / ma).ceil();
    let upper = n.max(1);
    if raw.is_nan() || raw < 1.0 {
        1
    } else if raw >= upper as f64 {
        upper
    } else {
        raw as usize
    }
}

/// Number of clusters for the given observations and cluster scale `ma`.
pub fn compute_k(obs: &[Observation], ma: f64) -> Result<usize> {
    if obs.is_empty() {
        return Err(Error::InvalidArgument("no observations to cluster".into()));
    }
    if !(ma > 0.0) {
        return Err(Error::InvalidArgument(format!("ma must be positive, got {ma}")));
    }
    Ok(kappa_from_extent(max_pairwise_distance(obs), ma, obs.len()))
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans(points: &[PlanarPoint], k: usize, seed: u64) -> Result<ClusterSet> {
    kmeans_traced(points, k, seed).map(|(cs, _)| cs)
}

/// [`kmeans`] that also returns the SSE after every Lloyd update.
pub fn kmeans_traced(points: &[PlanarPoint], k: usize, seed: u64) -> Result<(ClusterSet, Vec<f64>)> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in [1, {}]",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignment = vec![0usize; points.len()];
    let mut trace = Vec::new();

    for _ in 0..MAX_LLOYD_ITERATIONS {
        assign(points, &centroids, &mut assignment);
        repair_empty(points, &mut centroids, &mut assignment);

        let updated = update_centroids(points, &assignment, k);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max);
        centroids = updated;
        trace.push(sse_of(points, &centroids, &assignment));
        if shift < CONVERGENCE_TOLERANCE_M {
            break;
        }
    }

    let mut clusters: Vec<Cluster> = centroids
        .into_iter()
        .map(|centroid| Cluster {
            centroid,
            members: Vec::new(),
        })
        .collect();
    for (i, &c) in assignment.iter().enumerate() {
        clusters[c].members.push(i);
    }
    Ok((ClusterSet { clusters }, trace))
}

fn plus_plus_init(points: &[PlanarPoint], k: usize, rng: &mut ChaCha8Rng) -> Vec<PlanarPoint> {
    let mut centroids = Vec::with_capacity(k);
    let mut chosen = vec![false; points.len()];
    let first = rng.random_range(0..points.len());
    chosen[first] = true;
    centroids.push(points[first]);

    let mut d2: Vec<f64> = points.iter().map(|p| p.distance_sq(&points[first])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
            pick.expect("positive total weight implies a candidate")
        } else {
            // Every remaining point coincides with a centroid.
            let free: Vec<usize> = (0..points.len()).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[next] = true;
        centroids.push(points[next]);
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(p.distance_sq(&points[next]));
        }
    }
    centroids
}

fn assign(points: &[PlanarPoint], centroids: &[PlanarPoint], assignment: &mut [usize]) {
    for (p, slot) in points.iter().zip(assignment.iter_mut()) {
        let mut best = *slot;
        let mut best_d = p.distance_sq(&centroids[best]);
        for (j, c) in centroids.iter().enumerate() {
            let d = p.distance_sq(c);
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        *slot = best;
    }
}

/// Reseeds each empty cluster at the point farthest from its own centroid,
/// taken from a cluster that can spare a member.
fn repair_empty(points: &[PlanarPoint], centroids: &mut [PlanarPoint], assignment: &mut [usize]) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &c in assignment.iter() {
        counts[c] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let donor = (0..points.len())
            .filter(|&i| counts[assignment[i]] > 1)
            .max_by(|&a, &b| {
                let da = points[a].distance_sq(&centroids[assignment[a]]);
                let db = points[b].distance_sq(&centroids[assignment[b]]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("k <= n guarantees a cluster with a spare member");
        counts[assignment[donor]] -= 1;
        assignment[donor] = empty;
        counts[empty] = 1;
        centroids[empty] = points[donor];
    }
}

fn update_centroids(points: &[PlanarPoint], assignment: &[usize], k: usize) -> Vec<PlanarPoint> {
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &c) in points.iter().zip(assignment) {
        sums[c].0 += p.x;
        sums[c].1 += p.y;
        sums[c].2 += 1;
    }
    sums.into_iter()
        .map(|(sx, sy, n)| PlanarPoint::new(sx / n as f64, sy / n as f64))
        .collect()
}

fn sse_of(points: &[PlanarPoint], centroids: &[PlanarPoint], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| p.distance_sq(&centroids[c]))
        .sum()
}

/// Drops clusters with `r_thresh` or fewer members.
pub fn filter_clusters(cs: ClusterSet, r_thresh: usize) -> ClusterSet {
    ClusterSet {
        clusters: cs.clusters.into_iter().filter(|c| c.members.len() > r_thresh).collect(),
    }
}

/// Picks the strongest observation of every cluster; ties go to the earliest
/// timestamp. `obs` must be the list the clusters index into and `origin` the
/// projection origin used to cluster it.
pub fn select_reference_nodes(
    cs: &ClusterSet,
    obs: &[Observation],
    cal: &Calibration,
    origin: GeoPoint,
) -> Vec<ReferenceNode> {
    cs.clusters
        .iter()
        .filter_map(|c| {
            let best = c.members.iter().copied().reduce(|best, i| {
                let (a, b) = (&obs[best], &obs[i]);
                if b.rssi > a.rssi || (b.rssi == a.rssi && b.t < a.t) {
                    i
                } else {
                    best
                }
            })?;
            let o = &obs[best];
            Some(ReferenceNode {
                pos_planar: geo::project_unchecked(origin, o.pos),
                pos_geo: o.pos,
                rssi: o.rssi,
                distance: rssi_to_distance(o.rssi, cal),
            })
        })
        .collect()
}

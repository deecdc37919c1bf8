//! Single-receiver RSSI localization of a stationary transmitter.
//!
//! A UAV records its GPS position together with the received signal
//! strength of a transmitter. Ranges are inferred from a log-distance
//! path-loss model, a handful of representative anchors are chosen by
//! spatially clustering the flight, and the target is found by linearized
//! least-squares multilateration. The estimate is refined as the flight
//! progresses by re-running on the growing log and keeping the iteration
//! with the smallest model residual.
//!
//! Modules, bottom-up:
//!
//! - [`geo`]: haversine distance and local planar projection
//! - [`pathloss`]: free-space model, RSSI to range, calibration fitting
//! - [`cluster`]: thresholding, K-means, reference-node selection
//! - [`lateration`]: linear system construction and SVD solve
//! - [`estimator`]: the batched iteration loop and best-iteration selection
//! - [`simulator`]: synthetic survey flights, baseline and `ma` sweeps
//! - [`io`]: CSV observation logs and JSON run reports

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod error;
pub mod estimator;
pub mod geo;
pub mod io;
pub mod lateration;
pub mod pathloss;
pub mod simulator;

pub use cluster::{ClusterSet, Observation, ReferenceNode};
pub use error::{Error, Result};
pub use estimator::{Estimator, EstimatorConfig, IterationResult, IterationStatus, RThreshPolicy, SkipReason};
pub use geo::{haversine, GeoPoint, PlanarPoint};
pub use io::{ObservationLog, RunReport};
pub use lateration::{LaterationSolution, LinearSystem, PositionEstimate};
pub use pathloss::{Calibration, TxParams};
pub use simulator::{FlightPlan, SimScenario};

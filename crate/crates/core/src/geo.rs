//! Spherical WGS84 geodesy: great-circle distances and a local
//! equirectangular projection about a survey origin.
//!
//! The earth is modelled as a sphere of radius [`EARTH_RADIUS_M`]. Survey
//! areas are a few square kilometres, so the planar frame is treated as
//! metric within [`MAX_PROJECTION_RANGE_M`] of its origin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean earth radius used by every distance and projection in the crate.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Points farther than this from the projection origin are rejected.
pub const MAX_PROJECTION_RANGE_M: f64 = 100_000.0;

/// A latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Validated constructor; latitude must lie in [-90, 90] and longitude in
    /// [-180, 180].
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::Domain(format!("non-finite coordinate ({lat}, {lon})")));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::Domain(format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::Domain(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(Self { lat, lon })
    }
}

/// Local east/north offsets in meters from a projection origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &PlanarPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Great-circle distance in meters.
pub fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    // Absolute deltas keep the result bitwise symmetric in (a, b).
    let dlat = (b.lat - a.lat).abs().to_radians();
    let dlon = (b.lon - a.lon).abs().to_radians();
    let s_lat = (dlat / 2.0).sin();
    let s_lon = (dlon / 2.0).sin();
    let h = (s_lat * s_lat + lat1.cos() * lat2.cos() * s_lon * s_lon).clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_M * h.sqrt().asin()
}

/// Equirectangular projection of `p` about `origin`.
pub fn project(origin: GeoPoint, p: GeoPoint) -> Result<PlanarPoint> {
    let range = haversine(origin, p);
    if range >= MAX_PROJECTION_RANGE_M {
        return Err(Error::Domain(format!(
            "point is {range:.0} m from projection origin (limit {MAX_PROJECTION_RANGE_M} m)"
        )));
    }
    Ok(project_unchecked(origin, p))
}

#[inline]
pub(crate) fn project_unchecked(origin: GeoPoint, p: GeoPoint) -> PlanarPoint {
    let k = EARTH_RADIUS_M * PI / 180.0;
    PlanarPoint {
        x: k * (p.lon - origin.lon) * origin.lat.to_radians().cos(),
        y: k * (p.lat - origin.lat),
    }
}

/// Inverse of [`project`] for the same origin.
///
/// Results that leave the valid coordinate range (only possible for planar
/// offsets far outside the projection's domain) are clamped in latitude and
/// wrapped in longitude.
pub fn unproject(origin: GeoPoint, q: PlanarPoint) -> GeoPoint {
    let k = EARTH_RADIUS_M * PI / 180.0;
    let lat = origin.lat + q.y / k;
    let lon = origin.lon + q.x / (k * origin.lat.to_radians().cos());
    GeoPoint {
        lat: lat.clamp(-90.0, 90.0),
        lon: wrap_longitude(lon),
    }
}

fn wrap_longitude(lon: f64) -> f64 {
    if (-180.0..=180.0).contains(&lon) {
        lon
    } else {
        (lon + 180.0).rem_euclid(360.0) - 180.0
    }
}

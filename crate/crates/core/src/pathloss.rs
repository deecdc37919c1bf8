//! RF propagation: free-space received power with log-normal shadowing, and
//! the inverse log-distance mapping from RSSI to range.
//!
//! All powers are handled in the decibel domain.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Transmitter and antenna parameters for the free-space model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TxParams {
    pub pt_dbm: f64,
    pub gt_db: f64,
    pub gr_db: f64,
    pub wavelength_m: f64,
}

impl TxParams {
    pub fn new(pt_dbm: f64, gt_db: f64, gr_db: f64, wavelength_m: f64) -> Result<Self> {
        if ![pt_dbm, gt_db, gr_db, wavelength_m].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite transmitter parameter".into()));
        }
        if wavelength_m <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "wavelength must be positive, got {wavelength_m}"
            )));
        }
        Ok(Self {
            pt_dbm,
            gt_db,
            gr_db,
            wavelength_m,
        })
    }

    /// Isotropic antennas at the given carrier frequency.
    pub fn isotropic(pt_dbm: f64, frequency_hz: f64) -> Result<Self> {
        if !(frequency_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "frequency must be positive, got {frequency_hz}"
            )));
        }
        Self::new(pt_dbm, 0.0, 0.0, SPEED_OF_LIGHT / frequency_hz)
    }
}

/// Per-survey log-distance model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Reference distance in meters.
    pub d0: f64,
    /// Received power at `d0`, dBm.
    pub p0_dbm: f64,
    /// Path-loss exponent.
    pub n: f64,
    /// Shadowing standard deviation, dB.
    pub sigma_db: f64,
}

impl Calibration {
    pub fn new(d0: f64, p0_dbm: f64, n: f64, sigma_db: f64) -> Result<Self> {
        if !(d0 > 0.0) || !d0.is_finite() {
            return Err(Error::InvalidArgument(format!("d0 must be positive, got {d0}")));
        }
        if !p0_dbm.is_finite() {
            return Err(Error::InvalidArgument(format!("p0 must be finite, got {p0_dbm}")));
        }
        if !(n > 0.5 && n <= 8.0) {
            return Err(Error::InvalidArgument(format!(
                "path-loss exponent must lie in (0.5, 8], got {n}"
            )));
        }
        if !(sigma_db >= 0.0) || !sigma_db.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma must be non-negative, got {sigma_db}"
            )));
        }
        Ok(Self {
            d0,
            p0_dbm,
            n,
            sigma_db,
        })
    }

    /// The free-space (n = 2) calibration consistent with `tx`, referenced at
    /// `d0` meters.
    pub fn free_space(tx: &TxParams, d0: f64, sigma_db: f64) -> Result<Self> {
        let p0 = friis_rssi(tx, d0)?;
        Self::new(d0, p0, 2.0, sigma_db)
    }
}

/// Received power in dBm at distance `d` meters under free-space propagation.
pub fn friis_rssi(tx: &TxParams, d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    Ok(tx.pt_dbm + tx.gt_db + tx.gr_db + 20.0 * (tx.wavelength_m / (4.0 * PI * d)).log10())
}

/// Range in meters implied by a received power under `cal`, taking the
/// shadowing term at its mean of zero.
pub fn rssi_to_distance(pr_dbm: f64, cal: &Calibration) -> f64 {
    cal.d0 * 10f64.powf((cal.p0_dbm - pr_dbm) / (10.0 * cal.n))
}

/// Free-space power at `d` plus a zero-mean Gaussian shadowing draw.
pub fn sample_shadowed_rssi<R: Rng + ?Sized>(tx: &TxParams, d: f64, sigma_db: f64, rng: &mut R) -> Result<f64> {
    let mean = friis_rssi(tx, d)?;
    if sigma_db == 0.0 {
        return Ok(mean);
    }
    let normal = Normal::new(0.0, sigma_db).map_err(|e| Error::InvalidArgument(format!("sigma {sigma_db}: {e}")))?;
    Ok(mean + normal.sample(rng))
}

/// Least-squares fit of `p0` and `n` to `(distance, rssi)` samples for a
/// fixed reference distance `d0`.
///
/// The returned `sigma_db` is the residual standard deviation (N - 2 degrees
/// of freedom; zero for two samples).
pub fn fit_exponent(samples: &[(f64, f64)], d0: f64) -> Result<Calibration> {
    if samples.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(d0 > 0.0) {
        return Err(Error::InvalidArgument(format!("d0 must be positive, got {d0}")));
    }
    if let Some(&(d, _)) = samples.iter().find(|(d, pr)| !(*d > 0.0) || !pr.is_finite()) {
        return Err(Error::Domain(format!("invalid calibration sample at distance {d}")));
    }

    let count = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|(d, _)| (d / d0).log10()).collect();
    let mean_x = xs.iter().sum::<f64>() / count;
    let mean_y = samples.iter().map(|(_, pr)| pr).sum::<f64>() / count;

    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, (_, y)) in xs.iter().zip(samples) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx <= f64::EPSILON * count {
        return Err(Error::DegenerateFit("all samples share one distance".into()));
    }

    let slope = sxy / sxx;
    let p0 = mean_y - slope * mean_x;
    let n = -slope / 10.0;

    let ssr: f64 = xs
        .iter()
        .zip(samples)
        .map(|(x, (_, y))| {
            let r = y - (p0 + slope * x);
            r * r
        })
        .sum();
    let sigma = if samples.len() > 2 {
        (ssr / (count - 2.0)).sqrt()
    } else {
        0.0
    };

    Calibration::new(d0, p0, n, sigma).map_err(|e| Error::DegenerateFit(format!("fitted parameters rejected: {e}")))
}

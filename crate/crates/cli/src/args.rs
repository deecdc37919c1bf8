use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rssiloc_core::{GeoPoint, RThreshPolicy};

#[derive(Debug, Parser)]
#[command(name = "rssiloc", version, about = "Single-UAV RSSI localization toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a survey flight and write its observation log.
    Simulate(SimulateArgs),
    /// Run the clustered iterative estimator over an observation log.
    Estimate(EstimateArgs),
    /// Plain multilateration over every observation in a log.
    Baseline(BaselineArgs),
    /// Sweep the cluster scale and tabulate the final estimation error.
    SweepMa(SweepArgs),
    /// Score an estimate or a run report against ground truth.
    Evaluate(EvaluateArgs),
    /// Fit path-loss parameters from a reference flight around a known transmitter.
    Calibrate(CalibrateArgs),
}

/// Calibration overrides; unset fields fall back to the log's `# cal` line.
#[derive(Debug, Args, Clone, Default)]
pub struct CalArgs {
    /// Path-loss exponent.
    #[arg(long)]
    pub n: Option<f64>,
    /// Reference distance in meters.
    #[arg(long)]
    pub d0: Option<f64>,
    /// Received power at the reference distance, dBm.
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<f64>,
    /// Shadowing standard deviation, dB.
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct EstimatorArgs {
    /// Cluster scale in meters.
    #[arg(long, default_value_t = 130.0)]
    pub ma: f64,
    /// Observations per iteration.
    #[arg(long = "batch", default_value_t = 50)]
    pub batch: usize,
    /// Drop observations weaker than this, dBm.
    #[arg(long = "min-rssi", allow_hyphen_values = true)]
    pub min_rssi: Option<f64>,
    /// Minimum cluster size: an integer, or `iteration` to use the iteration index.
    #[arg(long = "r-thresh", default_value = "iteration", value_parser = parse_r_thresh)]
    pub r_thresh: RThreshPolicy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "gtu-sim")]
    pub scenario: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shadowing standard deviation override, dB.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Flight time in seconds; defaults to one pass over the flight plan.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Reference distance for the calibration written into the log header.
    #[arg(long, default_value_t = 100.0)]
    pub d0: f64,
    /// Round RSSI to 0.5 dB and clamp to the sensor range.
    #[arg(long)]
    pub quantize: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub obs: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub cal: CalArgs,
    /// Ground-truth transmitter position, `lat,lon`.
    #[arg(long, value_parser = parse_latlon, allow_hyphen_values = true)]
    pub truth: Option<GeoPoint>,
    /// Also run the plain all-observations baseline.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub obs: PathBuf,
    #[command(flatten)]
    pub cal: CalArgs,
    #[arg(long, value_parser = parse_latlon, allow_hyphen_values = true)]
    pub truth: Option<GeoPoint>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Observation log to sweep over; requires `--truth`.
    #[arg(long, conflicts_with = "scenario")]
    pub obs: Option<PathBuf>,
    /// Simulate this scenario instead of reading a log.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Shadowing override for `--scenario`, dB.
    #[arg(long = "sim-sigma")]
    pub sim_sigma: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    /// Comma-separated cluster scales in meters.
    #[arg(
        long = "ma-values",
        value_delimiter = ',',
        default_value = "50,70,90,110,130,150,170,190"
    )]
    pub ma_values: Vec<f64>,
    #[arg(long = "batch", default_value_t = 50)]
    pub batch: usize,
    #[arg(long = "min-rssi", allow_hyphen_values = true)]
    pub min_rssi: Option<f64>,
    #[arg(long = "r-thresh", default_value = "iteration", value_parser = parse_r_thresh)]
    pub r_thresh: RThreshPolicy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub cal: CalArgs,
    #[arg(long, value_parser = parse_latlon, allow_hyphen_values = true)]
    pub truth: Option<GeoPoint>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Run report produced by `estimate`.
    #[arg(long, conflicts_with = "estimate")]
    pub report: Option<PathBuf>,
    /// A single estimate, `lat,lon`.
    #[arg(long, value_parser = parse_latlon, allow_hyphen_values = true)]
    pub estimate: Option<GeoPoint>,
    /// Ground truth; defaults to the truth recorded in the report.
    #[arg(long, value_parser = parse_latlon, allow_hyphen_values = true)]
    pub truth: Option<GeoPoint>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Reference flight log.
    #[arg(long)]
    pub obs: PathBuf,
    /// Known transmitter position, `lat,lon`.
    #[arg(long, value_parser = parse_latlon, allow_hyphen_values = true)]
    pub truth: GeoPoint,
    #[arg(long, default_value_t = 100.0)]
    pub d0: f64,
    /// Write the calibration line here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_latlon(s: &str) -> Result<GeoPoint, String> {
    let (lat, lon) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lat,lon`, got `{s}`"))?;
    let lat: f64 = lat.trim().parse().map_err(|_| format!("bad latitude `{lat}`"))?;
    let lon: f64 = lon.trim().parse().map_err(|_| format!("bad longitude `{lon}`"))?;
    GeoPoint::new(lat, lon).map_err(|e| e.to_string())
}

fn parse_r_thresh(s: &str) -> Result<RThreshPolicy, String> {
    s.parse().map_err(|e: rssiloc_core::Error| e.to_string())
}

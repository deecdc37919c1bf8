//! Observation logs (CSV) and run reports (JSON).
//!
//! Log layout, UTF-8 with LF line endings:
//!
//! ```text
//! # survey gtu-sim-7
//! # cal d0=1 p0=-25.2 n=2 sigma=3
//! t_s,lat_deg,lon_deg,rssi_dbm
//! 0,40.7979,29.3451,-78.1
//! ```
//!
//! Comment lines start with `#`; only the `survey` and `cal` comments carry
//! metadata, others are ignored. Floats are written with at most nine
//! significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::Observation;
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, IterationResult, IterationStatus};
use crate::geo::GeoPoint;
use crate::pathloss::Calibration;
use crate::simulator::evaluate;

pub const LOG_HEADER: &str = "t_s,lat_deg,lon_deg,rssi_dbm";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationLog {
    pub survey_id: Option<String>,
    pub calibration: Option<Calibration>,
    pub rows: Vec<Observation>,
}

/// Formats `v` with at most nine significant digits, in the shortest form
/// that reads back to the rounded value.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("scientific float parses");
    let s = format!("{rounded}");
    s
}

pub fn parse_log(path: impl AsRef<Path>) -> Result<ObservationLog> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_log_str(&text)
}

pub fn parse_log_str(text: &str) -> Result<ObservationLog> {
    let mut log = ObservationLog::default();
    let mut header_seen = false;
    let mut last_t: Option<f64> = None;

    for (idx, line) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Parse { line: line_no, message };

        if line.is_empty() && idx + 1 == text.split('\n').count() {
            break;
        }
        if line.contains('\r') {
            return Err(err("carriage return in line; logs use LF line endings".into()));
        }
        if let Some(comment) = line.strip_prefix('#') {
            parse_comment(comment.trim(), &mut log).map_err(err)?;
            continue;
        }
        if !header_seen {
            if line != LOG_HEADER {
                return Err(err(format!("expected header `{LOG_HEADER}`, found `{line}`")));
            }
            header_seen = true;
            continue;
        }

        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let mut values = [0.0f64; 4];
        for (slot, (field, name)) in values
            .iter_mut()
            .zip(fields.iter().zip(["t_s", "lat_deg", "lon_deg", "rssi_dbm"]))
        {
            let v: f64 = field
                .parse()
                .map_err(|_| err(format!("{name}: `{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(err(format!("{name}: non-finite value `{field}`")));
            }
            *slot = v;
        }
        let [t, lat, lon, rssi] = values;
        let pos = GeoPoint::new(lat, lon).map_err(|e| err(e.to_string()))?;
        let obs = Observation::new(t, pos, rssi).map_err(|e| err(e.to_string()))?;
        if let Some(prev) = last_t {
            if t < prev {
                return Err(err(format!("timestamp {t} precedes previous {prev}")));
            }
        }
        last_t = Some(t);
        log.rows.push(obs);
    }

    if !header_seen {
        return Err(Error::Parse {
            line: 1,
            message: "missing header line".into(),
        });
    }
    if log.rows.is_empty() {
        return Err(Error::EmptyLog);
    }
    Ok(log)
}

fn parse_comment(body: &str, log: &mut ObservationLog) -> std::result::Result<(), String> {
    if let Some(id) = body.strip_prefix("survey ") {
        log.survey_id = Some(id.trim().to_string());
    } else if let Some(rest) = body.strip_prefix("cal ") {
        let mut d0 = None;
        let mut p0 = None;
        let mut n = None;
        let mut sigma = None;
        for kv in rest.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("malformed calibration field `{kv}`"))?;
            let v: f64 = v
                .parse()
                .map_err(|_| format!("calibration {k}: `{v}` is not a number"))?;
            match k {
                "d0" => d0 = Some(v),
                "p0" => p0 = Some(v),
                "n" => n = Some(v),
                "sigma" => sigma = Some(v),
                other => return Err(format!("unknown calibration field `{other}`")),
            }
        }
        let (Some(d0), Some(p0), Some(n), Some(sigma)) = (d0, p0, n, sigma) else {
            return Err("calibration line needs d0, p0, n and sigma".into());
        };
        log.calibration = Some(Calibration::new(d0, p0, n, sigma).map_err(|e| e.to_string())?);
    }
    Ok(())
}

pub fn format_calibration(cal: &Calibration) -> String {
    format!(
        "cal d0={} p0={} n={} sigma={}",
        format_float(cal.d0),
        format_float(cal.p0_dbm),
        format_float(cal.n),
        format_float(cal.sigma_db)
    )
}

pub fn log_to_string(log: &ObservationLog) -> String {
    let mut out = String::new();
    if let Some(id) = &log.survey_id {
        writeln!(out, "# survey {id}").unwrap();
    }
    if let Some(cal) = &log.calibration {
        writeln!(out, "# {}", format_calibration(cal)).unwrap();
    }
    out.push_str(LOG_HEADER);
    out.push('\n');
    for o in &log.rows {
        writeln!(
            out,
            "{},{},{},{}",
            format_float(o.t),
            format_float(o.pos.lat),
            format_float(o.pos.lon),
            format_float(o.rssi)
        )
        .unwrap();
    }
    out
}

pub fn write_log(log: &ObservationLog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, log_to_string(log)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl From<GeoPoint> for LatLon {
    fn from(g: GeoPoint) -> Self {
        Self { lat: g.lat, lon: g.lon }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub clusters_used: usize,
    pub status: String,
    pub residual_rms: Option<f64>,
    pub condition: Option<f64>,
    pub estimate: Option<LatLon>,
    pub error_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub iteration: usize,
    pub residual_rms: f64,
    pub estimate: LatLon,
    pub error_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub estimate: Option<LatLon>,
    pub residual_rms: Option<f64>,
    pub condition: Option<f64>,
    pub error_m: Option<f64>,
    /// Failure description when the baseline could not be solved.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: EstimatorConfig,
    pub n_observations: usize,
    pub truth: Option<LatLon>,
    pub iterations: Vec<IterationRecord>,
    pub best: Option<BestRecord>,
    pub baseline: Option<BaselineRecord>,
}

impl RunReport {
    /// Assembles a report from an estimator history, scoring every estimate
    /// against `truth` when it is known.
    pub fn from_history(
        config: EstimatorConfig,
        n_observations: usize,
        history: &[IterationResult],
        truth: Option<GeoPoint>,
    ) -> Self {
        let score = |g: Option<GeoPoint>| g.zip(truth).map(|(e, t)| evaluate(e, t));
        let iterations = history
            .iter()
            .map(|it| IterationRecord {
                index: it.index,
                n_obs: it.n_obs,
                n_clusters: it.n_clusters,
                clusters_used: it.n_clusters_used,
                status: match it.status {
                    IterationStatus::Ok => "ok".to_string(),
                    IterationStatus::Skipped(r) => format!("skipped:{r}"),
                },
                residual_rms: it.residual_rms,
                condition: it.condition,
                estimate: it.estimate.map(LatLon::from),
                error_m: score(it.estimate),
            })
            .collect();
        let best = crate::estimator::best_of(history).ok().map(|(g, it)| BestRecord {
            iteration: it.index,
            residual_rms: it.residual_rms.unwrap_or_default(),
            estimate: g.into(),
            error_m: score(Some(g)),
        });
        Self {
            config,
            n_observations,
            truth: truth.map(LatLon::from),
            iterations,
            best,
            baseline: None,
        }
    }
}

pub fn report_to_string(report: &RunReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn write_report(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report_to_string(report)?).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<RunReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{RThreshPolicy, SkipReason};
    use proptest::prelude::*;

    fn cal() -> Calibration {
        Calibration::new(1.0, -25.2, 2.0, 3.0).unwrap()
    }

    #[test]
    fn parses_documented_row() {
        let log = parse_log_str("t_s,lat_deg,lon_deg,rssi_dbm\n12.0,40.806500,29.358900,-87.5\n").unwrap();
        assert_eq!(log.rows.len(), 1);
        let o = log.rows[0];
        assert_eq!(o.t, 12.0);
        assert_eq!(o.pos, GeoPoint::new(40.8065, 29.3589).unwrap());
        assert_eq!(o.rssi, -87.5);
    }

    #[test]
    fn header_only_is_empty_log() {
        assert!(matches!(
            parse_log_str("t_s,lat_deg,lon_deg,rssi_dbm\n"),
            Err(Error::EmptyLog)
        ));
        assert!(matches!(parse_log_str(""), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn errors_name_the_line() {
        let text = "# survey x\nt_s,lat_deg,lon_deg,rssi_dbm\n0,40,29,-80\n1,91.0,29,-80\n";
        match parse_log_str(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("latitude"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let cases = [
            "t_s,lat_deg,lon_deg,rssi_dbm\n0,40,29,NaN\n",
            "t_s,lat_deg,lon_deg,rssi_dbm\n0,40,29\n",
            "t_s,lat_deg,lon_deg,rssi_dbm\n5,40,29,-80\n4,40,29,-80\n",
            "t_s,lat_deg,lon_deg,rssi_dbm\r\n0,40,29,-80\n",
            "t,lat,lon,rssi\n0,40,29,-80\n",
            "t_s,lat_deg,lon_deg,rssi_dbm\n0,40,29,-80\n\n1,40,29,-80\n",
        ];
        for text in cases {
            assert!(matches!(parse_log_str(text), Err(Error::Parse { .. })), "{text:?}");
        }
    }

    #[test]
    fn metadata_comments() {
        let text = "# survey gtu-sim-7\n# cal d0=1 p0=-25.2 n=2 sigma=3\n# free text\nt_s,lat_deg,lon_deg,rssi_dbm\n0,40,29,-80\n";
        let log = parse_log_str(text).unwrap();
        assert_eq!(log.survey_id.as_deref(), Some("gtu-sim-7"));
        assert_eq!(log.calibration, Some(cal()));
        assert_eq!(log_to_string(&log), text.replace("# free text\n", ""));
        assert!(parse_log_str("# cal d0=1 n=2\nt_s,lat_deg,lon_deg,rssi_dbm\n0,40,29,-80\n").is_err());
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(12.0), "12");
        assert_eq!(format_float(-87.5), "-87.5");
        assert_eq!(format_float(40.806512345678), "40.8065123");
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(-0.0), "0");
    }

    fn sample_history() -> Vec<IterationResult> {
        vec![
            IterationResult {
                index: 1,
                n_obs: 50,
                n_clusters: 8,
                n_clusters_used: 2,
                estimate: None,
                residual_rms: None,
                condition: None,
                status: IterationStatus::Skipped(SkipReason::InsufficientReferences),
            },
            IterationResult {
                index: 2,
                n_obs: 100,
                n_clusters: 12,
                n_clusters_used: 9,
                estimate: Some(GeoPoint::new(40.8066, 29.3588).unwrap()),
                residual_rms: Some(1234.5),
                condition: Some(5.0e4),
                status: IterationStatus::Ok,
            },
        ]
    }

    #[test]
    fn report_scores_every_iteration_against_truth() {
        let truth = GeoPoint::new(40.8065, 29.3589).unwrap();
        let mut config = EstimatorConfig::new(130.0, cal());
        config.r_thresh = RThreshPolicy::Constant(2);
        let report = RunReport::from_history(config, 100, &sample_history(), Some(truth));
        assert_eq!(report.iterations[0].error_m, None);
        let e = report.iterations[1].error_m.unwrap();
        assert_eq!(e, evaluate(GeoPoint::new(40.8066, 29.3588).unwrap(), truth));
        let best = report.best.as_ref().unwrap();
        assert_eq!(best.iteration, 2);
        assert_eq!(best.error_m, Some(e));
    }

    #[test]
    fn report_round_trip_and_empty_history() {
        let dir = std::env::temp_dir().join(format!("rssiloc-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");

        let report = RunReport::from_history(EstimatorConfig::new(50.0, cal()), 100, &sample_history(), None);
        write_report(&report, &path).unwrap();
        assert_eq!(read_report(&path).unwrap(), report);

        let empty = RunReport::from_history(EstimatorConfig::new(50.0, cal()), 10, &[], None);
        assert!(empty.iterations.is_empty());
        assert!(empty.best.is_none());
        write_report(&empty, &path).unwrap();
        assert_eq!(read_report(&path).unwrap(), empty);

        let missing = dir.join("nope").join("run.json");
        assert!(matches!(write_report(&empty, &missing), Err(Error::Io { .. })));
        std::fs::remove_dir_all(&dir).ok();
    }

    fn arb_log() -> impl Strategy<Value = ObservationLog> {
        prop::collection::vec((0.0f64..5.0, -89.0f64..89.0, -179.0f64..179.0, -150.0f64..0.0), 1..40).prop_map(|rows| {
            let mut t = 0.0;
            let rows = rows
                .into_iter()
                .map(|(dt, lat, lon, rssi)| {
                    t += dt;
                    Observation::new(t, GeoPoint::new(lat, lon).unwrap(), rssi).unwrap()
                })
                .collect();
            ObservationLog {
                survey_id: Some("prop".into()),
                calibration: Some(cal()),
                rows,
            }
        })
    }

    proptest! {
        #[test]
        fn serialization_is_a_fixed_point(log in arb_log()) {
            let text = log_to_string(&log);
            let parsed = parse_log_str(&text).unwrap();
            prop_assert_eq!(log_to_string(&parsed), text.clone());
            // Values already at nine significant digits survive exactly.
            prop_assert_eq!(parse_log_str(&log_to_string(&parsed)).unwrap(), parsed);
        }
    }
}

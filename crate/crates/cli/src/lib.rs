//! Command-line driver for the `rssiloc` toolkit.
//!
//! Every failure is reported on stderr as a single line of the form
//! `rssiloc: error[<kind>]: <message>` followed by a nonzero exit.

use std::fmt::Write as _;
use std::path::Path;

use clap::Parser;
use rssiloc_core::io::{self, BaselineRecord, LatLon, ObservationLog};
use rssiloc_core::simulator::{self, SimScenario};
use rssiloc_core::{pathloss, Calibration, Error, Estimator, EstimatorConfig, GeoPoint, Result, RunReport};

pub mod args;

use args::{BaselineArgs, CalArgs, CalibrateArgs, Cli, Command, EstimateArgs, EvaluateArgs, SimulateArgs, SweepArgs};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
/// The run completed but produced no usable estimate.
pub const EXIT_NO_ESTIMATE: i32 = 3;

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid usage");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("rssiloc: error[usage]: {first} (see `rssiloc --help`)");
            return EXIT_USAGE;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rssiloc: error[{}]: {}", e.kind(), one_line(&e.to_string()));
            EXIT_FAILURE
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Baseline(a) => baseline(a),
        Command::SweepMa(a) => sweep(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Calibrate(a) => calibrate(a),
    }
}

fn scenario(name: &str, seed: u64, sigma: Option<f64>) -> Result<SimScenario> {
    let mut sc = SimScenario::preset(name, seed).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "unknown scenario `{name}` (available: {})",
            SimScenario::PRESETS.join(", ")
        ))
    })?;
    if let Some(s) = sigma {
        sc.sigma_db = s;
    }
    Ok(sc)
}

fn simulate(a: SimulateArgs) -> Result<i32> {
    let mut sc = scenario(&a.scenario, a.seed, a.sigma)?;
    sc.quantize = a.quantize;
    let duration = a.duration.unwrap_or_else(|| sc.plan.nominal_duration());
    let sim = simulator::simulate_observations(&sc, duration)?;
    let log = ObservationLog {
        survey_id: Some(format!("{}-{}", a.scenario, a.seed)),
        calibration: Some(sc.matched_calibration(a.d0)?),
        rows: sim.observations,
    };
    io::write_log(&log, &a.out)?;
    println!(
        "wrote {} observations ({} skipped) to {}",
        log.rows.len(),
        sim.skipped,
        a.out.display()
    );
    Ok(0)
}

fn resolve_calibration(log: &ObservationLog, flags: &CalArgs) -> Result<Calibration> {
    let base = log.calibration;
    let pick = |flag: Option<f64>, from_log: Option<f64>, name: &str| {
        flag.or(from_log).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no calibration for `{name}`: pass --{name} or add a `# cal` line"
            ))
        })
    };
    Calibration::new(
        pick(flags.d0, base.map(|c| c.d0), "d0")?,
        pick(flags.p0, base.map(|c| c.p0_dbm), "p0")?,
        pick(flags.n, base.map(|c| c.n), "n")?,
        flags.sigma.or(base.map(|c| c.sigma_db)).unwrap_or(0.0),
    )
}

fn baseline_record(log: &ObservationLog, cal: &Calibration, truth: Option<GeoPoint>) -> BaselineRecord {
    let origin = log.rows[0].pos;
    match simulator::run_baseline_svd(&log.rows, cal, origin) {
        Ok(est) => BaselineRecord {
            estimate: Some(est.geo.into()),
            residual_rms: Some(est.solution.residual_rms),
            condition: Some(est.solution.condition),
            error_m: truth.map(|t| simulator::evaluate(est.geo, t)),
            failure: None,
        },
        Err(e) => BaselineRecord {
            estimate: None,
            residual_rms: None,
            condition: None,
            error_m: None,
            failure: Some(format!("{}: {e}", e.kind())),
        },
    }
}

fn estimate(a: EstimateArgs) -> Result<i32> {
    let log = io::parse_log(&a.obs)?;
    let cal = resolve_calibration(&log, &a.cal)?;
    let cfg = EstimatorConfig {
        ma: a.estimator.ma,
        batch_size: a.estimator.batch,
        min_dbm: a.estimator.min_rssi,
        r_thresh: a.estimator.r_thresh,
        seed: a.estimator.seed,
        cal,
    };
    let est = Estimator::run(cfg, &log.rows)?;
    let mut report = RunReport::from_history(cfg, log.rows.len(), est.history(), a.truth);
    if a.baseline {
        report.baseline = Some(baseline_record(&log, &cal, a.truth));
    }
    io::write_report(&report, &a.out)?;

    let Some(best) = &report.best else {
        eprintln!(
            "rssiloc: error[no-estimate]: none of {} iterations produced an estimate; report written to {}",
            report.iterations.len(),
            a.out.display()
        );
        return Ok(EXIT_NO_ESTIMATE);
    };
    let mut line = format!(
        "best iteration {} of {}: {:.7},{:.7} residual_rms={:.6e}",
        best.iteration,
        report.iterations.len(),
        best.estimate.lat,
        best.estimate.lon,
        best.residual_rms
    );
    if let Some(e) = best.error_m {
        write!(line, " error_m={e:.2}").unwrap();
    }
    println!("{line}");
    Ok(0)
}

fn baseline(a: BaselineArgs) -> Result<i32> {
    let log = io::parse_log(&a.obs)?;
    let cal = resolve_calibration(&log, &a.cal)?;
    let origin = log.rows[0].pos;
    let est = simulator::run_baseline_svd(&log.rows, &cal, origin)?;
    let record = BaselineRecord {
        estimate: Some(est.geo.into()),
        residual_rms: Some(est.solution.residual_rms),
        condition: Some(est.solution.condition),
        error_m: a.truth.map(|t| simulator::evaluate(est.geo, t)),
        failure: None,
    };
    if let Some(out) = &a.out {
        let mut text = serde_json::to_string_pretty(&record)?;
        text.push('\n');
        write_file(out, &text)?;
    }
    let mut line = format!("baseline: {:.7},{:.7}", est.geo.lat, est.geo.lon);
    if let Some(e) = record.error_m {
        write!(line, " error_m={e:.2}").unwrap();
    }
    println!("{line}");
    Ok(0)
}

fn sweep(a: SweepArgs) -> Result<i32> {
    let (rows, truth, cal) = match (&a.obs, &a.scenario) {
        (Some(path), _) => {
            let log = io::parse_log(path)?;
            let truth = a
                .truth
                .ok_or_else(|| Error::InvalidArgument("--obs sweeps need --truth".into()))?;
            let cal = resolve_calibration(&log, &a.cal)?;
            (log.rows, truth, cal)
        }
        (None, Some(name)) => {
            let sc = scenario(name, a.seed, a.sim_sigma)?;
            let duration = a.duration.unwrap_or_else(|| sc.plan.nominal_duration());
            let sim = simulator::simulate_observations(&sc, duration)?;
            let matched = sc.matched_calibration(100.0)?;
            let cal = resolve_calibration(
                &ObservationLog {
                    calibration: Some(matched),
                    ..Default::default()
                },
                &a.cal,
            )?;
            (sim.observations, a.truth.unwrap_or(sc.target), cal)
        }
        (None, None) => return Err(Error::InvalidArgument("sweep-ma needs --obs or --scenario".into())),
    };
    let template = EstimatorConfig {
        ma: a.ma_values.first().copied().unwrap_or(1.0),
        batch_size: a.batch,
        min_dbm: a.min_rssi,
        r_thresh: a.r_thresh,
        seed: a.seed,
        cal,
    };
    template.validate()?;
    if let Some(bad) = a.ma_values.iter().find(|m| m.is_nan() || **m <= 0.0) {
        return Err(Error::InvalidArgument(format!("ma must be positive, got {bad}")));
    }
    let table = simulator::sweep_ma_log(&rows, truth, &a.ma_values, &template)?;

    let mut out = String::from("ma,error_m,best_iteration\n");
    for row in &table {
        writeln!(
            out,
            "{},{},{}",
            io::format_float(row.ma),
            row.error_m.map(io::format_float).unwrap_or_default(),
            row.best_iteration.map(|i| i.to_string()).unwrap_or_default()
        )
        .unwrap();
    }
    match &a.out {
        Some(path) => write_file(path, &out)?,
        None => print!("{out}"),
    }
    Ok(0)
}

fn evaluate(a: EvaluateArgs) -> Result<i32> {
    match (&a.report, a.estimate) {
        (Some(path), _) => {
            let report = io::read_report(path)?;
            let truth = a
                .truth
                .or(report.truth.map(|t| GeoPoint { lat: t.lat, lon: t.lon }))
                .ok_or_else(|| Error::InvalidArgument("no --truth given and none recorded in the report".into()))?;
            let score = |p: LatLon| simulator::evaluate(GeoPoint { lat: p.lat, lon: p.lon }, truth);
            let Some(best) = &report.best else {
                eprintln!("rssiloc: error[no-estimate]: report has no best estimate");
                return Ok(EXIT_NO_ESTIMATE);
            };
            println!("best_error_m={}", io::format_float(score(best.estimate)));
            if let Some(est) = report.baseline.as_ref().and_then(|b| b.estimate) {
                println!("baseline_error_m={}", io::format_float(score(est)));
            }
            Ok(0)
        }
        (None, Some(est)) => {
            let truth = a
                .truth
                .ok_or_else(|| Error::InvalidArgument("--estimate needs --truth".into()))?;
            println!("error_m={}", io::format_float(simulator::evaluate(est, truth)));
            Ok(0)
        }
        (None, None) => Err(Error::InvalidArgument("evaluate needs --report or --estimate".into())),
    }
}

fn calibrate(a: CalibrateArgs) -> Result<i32> {
    let log = io::parse_log(&a.obs)?;
    let samples: Vec<(f64, f64)> = log
        .rows
        .iter()
        .map(|o| (rssiloc_core::haversine(o.pos, a.truth), o.rssi))
        .filter(|(d, _)| *d > 0.0)
        .collect();
    let cal = pathloss::fit_exponent(&samples, a.d0)?;
    let line = format!("# {}\n", io::format_calibration(&cal));
    if let Some(out) = &a.out {
        write_file(out, &line)?;
    }
    print!("{line}");
    Ok(0)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

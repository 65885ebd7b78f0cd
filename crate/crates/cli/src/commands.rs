use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use nfda_core::data::{
    acf, describe as describe_stats, ingest_csv, ingest_nwis_rdb, log_transform, Cadence, DescriptiveStats, Scale,
    TimeSeries, CFS_TO_CMS,
};
use nfda_core::eval::{
    run_extreme_experiment, run_prediction_experiment, ExtremeConfig, ForecastMethod, MetricChoice,
    PredictionConfig, QuantileMethod, QuantileReport,
};
use nfda_core::serde_float;

use crate::args::{
    DescribeArgs, ExtremesArgs, Format, FunctionalArgs, FunctionalScale, InputArgs, Metric, PredictArgs,
};
use crate::CliError;

type CmdResult = Result<(), CliError>;

pub fn load_series(input: &InputArgs) -> Result<TimeSeries, CliError> {
    let file = fs::File::open(&input.input).map_err(|e| CliError::io(&input.input, e))?;
    let reader = std::io::BufReader::new(file);
    let series = match input.format {
        Format::Rdb => ingest_nwis_rdb(reader, &input.column),
        Format::Csv => ingest_csv(reader, &input.column),
    }
    .map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", input.input.display(), err.message);
        err
    })?;
    info!(
        "read {} {:?} values from {} starting {}",
        series.len(),
        series.cadence(),
        input.input.display(),
        series.start()
    );
    Ok(if input.cfs_to_cms {
        series.scaled(CFS_TO_CMS)
    } else {
        series
    })
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn metric_choice(f: &FunctionalArgs) -> Result<MetricChoice, CliError> {
    if f.q == Some(0) {
        return Err(CliError::precondition("--q must be at least 1"));
    }
    for (name, v) in [("--h", f.h), ("--g", f.g)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::precondition(format!("{name} must be positive, got {v}")));
            }
        }
    }
    match f.metric {
        Metric::L2 => {
            if f.q.is_some() {
                return Err(CliError::precondition("--q only applies to --metric fpca"));
            }
            Ok(MetricChoice::L2)
        }
        Metric::Fpca => Ok(MetricChoice::Fpca { q: f.q }),
    }
}

// ---------------------------------------------------------------------------
// describe
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct AcfReport {
    lags: Vec<usize>,
    raw: Vec<f64>,
    /// `None` when the series has non-positive values.
    log: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct DescribeReport {
    input: String,
    column: String,
    cadence: Cadence,
    start: String,
    end: String,
    units: &'static str,
    stats: DescriptiveStats,
    acf: AcfReport,
}

pub fn describe(args: &DescribeArgs) -> CmdResult {
    if args.max_lag == 0 {
        return Err(CliError::precondition("--max-lag must be at least 1"));
    }
    let series = load_series(&args.input)?;
    prepare_out(&args.input.out)?;
    let stats = describe_stats(&series)?;
    if series.len() <= args.max_lag {
        return Err(CliError::precondition(format!(
            "--max-lag {} needs more than {} observations, got {}",
            args.max_lag,
            args.max_lag,
            series.len()
        )));
    }
    let raw = acf(&series, args.max_lag)?[1..].to_vec();
    let log = match log_transform(&series) {
        Ok(l) => Some(acf(&l, args.max_lag)?[1..].to_vec()),
        Err(_) => None,
    };
    let report = DescribeReport {
        input: args.input.input.display().to_string(),
        column: args.input.column.clone(),
        cadence: series.cadence(),
        start: series.stamp(0),
        end: series.stamp(series.len() - 1),
        units: if args.input.cfs_to_cms { "m3/s (converted from ft3/s)" } else { "as read" },
        stats,
        acf: AcfReport {
            lags: (1..=args.max_lag).collect(),
            raw,
            log,
        },
    };

    let s = &report.stats;
    let mut stats_csv = String::from("statistic,value\n");
    for (name, v) in [
        ("n", s.n as f64),
        ("min", s.min),
        ("q1", s.q1),
        ("median", s.median),
        ("mean", s.mean),
        ("q3", s.q3),
        ("max", s.max),
        ("sd", s.sd),
        ("skewness", s.skewness),
        ("kurtosis", s.kurtosis),
    ] {
        let _ = writeln!(stats_csv, "{name},{}", serde_float::format(v));
    }
    let mut acf_csv = String::from("lag,acf,acf_log\n");
    for (i, lag) in report.acf.lags.iter().enumerate() {
        let log = report.acf.log.as_ref().map(|l| serde_float::format(l[i])).unwrap_or_default();
        let _ = writeln!(acf_csv, "{lag},{},{log}", serde_float::format(report.acf.raw[i]));
    }
    write_file(&args.input.out, "describe.json", &to_json(&report))?;
    write_file(&args.input.out, "stats.csv", &stats_csv)?;
    write_file(&args.input.out, "acf.csv", &acf_csv)?;

    println!(
        "{} observations ({:?}) {} .. {}",
        s.n, report.cadence, report.start, report.end
    );
    println!(
        "min {:.2}  q1 {:.2}  median {:.2}  mean {:.2}  q3 {:.2}  max {:.2}",
        s.min, s.q1, s.median, s.mean, s.q3, s.max
    );
    println!("sd {:.2}  skewness {:.2}  kurtosis {:.2}", s.sd, s.skewness, s.kurtosis);
    Ok(())
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

fn parse_forecast_methods(names: &[String]) -> Result<Vec<ForecastMethod>, CliError> {
    let mut out = Vec::new();
    for name in names {
        let m = match name.trim().to_ascii_lowercase().as_str() {
            "median" | "nfda-median" => ForecastMethod::NfdaMedian,
            "regression" | "nfda-regression" => ForecastMethod::NfdaRegression,
            "ar" | "ar-baseline" => ForecastMethod::ArBaseline,
            other => {
                return Err(CliError::precondition(format!(
                    "unknown method {other:?} (expected median, regression, ar)"
                )))
            }
        };
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::precondition("--methods is empty"));
    }
    Ok(out)
}

pub fn predict(args: &PredictArgs) -> CmdResult {
    let methods = parse_forecast_methods(&args.methods)?;
    let metric = metric_choice(&args.functional)?;
    let series = load_series(&args.input)?;
    if series.cadence() != Cadence::Monthly {
        return Err(CliError::precondition("predict needs a monthly series"));
    }
    prepare_out(&args.input.out)?;
    let config = PredictionConfig {
        metric,
        h: args.functional.h,
        g: args.functional.g,
        methods,
        ar_order: args.ar_order,
        include_latest_pair: !args.exclude_latest_pair,
    };
    let report = run_prediction_experiment(&series, &config)?;
    let text = report.to_text();
    write_file(&args.input.out, "prediction.json", &to_json(&report))?;
    write_file(&args.input.out, "prediction.txt", &text)?;
    for m in &report.methods {
        let mut csv = String::from("month,predicted,true\n");
        for (i, month) in report.months.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{month},{},{}",
                serde_float::format(m.predictions[i]),
                serde_float::format(report.truth[i])
            );
        }
        write_file(&args.input.out, &format!("prediction_{}.csv", m.method.label()), &csv)?;
    }
    print!("{text}");
    Ok(())
}

// ---------------------------------------------------------------------------
// extremes
// ---------------------------------------------------------------------------

fn parse_quantile_methods(names: &[String]) -> Result<Vec<QuantileMethod>, CliError> {
    let mut out = Vec::new();
    for name in names {
        let m = match name.trim().to_ascii_lowercase().as_str() {
            "gev" => QuantileMethod::Gev,
            "kernel" => QuantileMethod::Kernel,
            "nfda" | "functional" => QuantileMethod::Nfda,
            other => {
                return Err(CliError::precondition(format!(
                    "unknown method {other:?} (expected gev, kernel, nfda)"
                )))
            }
        };
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::precondition("--methods is empty"));
    }
    Ok(out)
}

pub fn quantile_plot_csv(report: &QuantileReport) -> String {
    let mut csv = String::from("level,c_i,return_period");
    for m in &report.methods {
        let _ = write!(csv, ",{}", m.method.label());
    }
    csv.push('\n');
    for i in 0..report.levels.len() {
        let _ = write!(
            csv,
            "{},{},{}",
            i + 1,
            serde_float::format(report.levels[i]),
            serde_float::format(report.return_periods[i])
        );
        for m in &report.methods {
            let v = m.estimates[i].map(serde_float::format).unwrap_or_default();
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
    }
    csv
}

pub fn extremes(args: &ExtremesArgs) -> CmdResult {
    let methods = parse_quantile_methods(&args.methods)?;
    let metric = metric_choice(&args.functional)?;
    if args.levels == 0 {
        return Err(CliError::precondition("--levels must be at least 1"));
    }
    if let Some(h) = args.kernel_h {
        if !(h > 0.0 && h.is_finite()) {
            return Err(CliError::precondition(format!("--kernel-h must be positive, got {h}")));
        }
    }
    let series = load_series(&args.input)?;
    if series.cadence() != Cadence::Daily {
        return Err(CliError::precondition("extremes needs a daily series"));
    }
    prepare_out(&args.input.out)?;
    let config = ExtremeConfig {
        metric,
        h: args.functional.h,
        g: args.functional.g,
        kernel_bandwidth: args.kernel_h,
        methods,
        levels: args.levels,
        gev_max_iterations: args.gev_max_iterations,
        functional_scale: match args.functional_scale {
            FunctionalScale::Log => Scale::NaturalLog,
            FunctionalScale::Raw => Scale::Raw,
        },
    };
    let report = run_extreme_experiment(&series, &config)?;
    let text = report.to_text();
    write_file(&args.input.out, "quantiles.json", &to_json(&report))?;
    write_file(&args.input.out, "quantiles.txt", &text)?;
    write_file(&args.input.out, "quantiles.csv", &quantile_plot_csv(&report))?;
    print!("{text}");
    if args.strict {
        if let Some(fit) = report.gev_fit.as_ref().filter(|f| !f.converged) {
            return Err(CliError::numerical(format!(
                "GEV fit did not converge after {} iterations (--strict)",
                fit.iterations
            )));
        }
    }
    Ok(())
}

//! End-to-end experiments: next-year monthly prediction (NFDA median,
//! NFDA regression, AR baseline) and flood-quantile comparison (GEV,
//! scalar kernel, NFDA), with the autoregressive baseline they share.

use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{log_transform, to_annual_curves, to_monthly_curves, Cadence, Scale, TimeSeries};
use crate::error::{Error, Result};
use crate::evt::{empirical_return_period, gev_fit_mle_limited, levels_grid_n, GevFit, LEVEL_COUNT, MLE_MAX_ITERATIONS};
use crate::fda::{
    fit_fpca, fit_fpca_auto, tune_bandwidths, CurveForecaster, MetricSummary, Predictor, SemiMetric,
    DEFAULT_EXPLAINED_VARIANCE,
};
use crate::serde_float;
use crate::smooth::{cv_profile, KernelCdfModel, CV_CRITERION};

// ---------------------------------------------------------------------------
// AR(p) baseline
// ---------------------------------------------------------------------------

pub const AR_MAX_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub order: usize,
    /// `coefficients[j]` multiplies `Z_{t-1-j}`.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub noise_variance: f64,
    /// AIC on the fitting sample, `m ln(RSS / m) + 2 (p + 1)`.
    pub aic: f64,
}

struct OlsFit {
    intercept: f64,
    coefficients: Vec<f64>,
    rss: f64,
    rows: usize,
}

fn ols_ar(values: &[f64], p: usize, first_target: usize) -> Result<OlsFit> {
    let rows = values.len() - first_target;
    let design = DMatrix::from_fn(rows, p + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            values[first_target + r - c]
        }
    });
    let target = DVector::from_iterator(rows, values[first_target..].iter().copied());
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    if !(max_sv > 0.0) || min_sv <= 1e-10 * max_sv {
        return Err(Error::Degenerate(format!("singular AR({p}) design (constant series?)")));
    }
    let beta = svd
        .solve(&target, 1e-12 * max_sv)
        .map_err(|e| Error::Degenerate(format!("AR least squares failed: {e}")))?;
    let resid = &target - &design * &beta;
    Ok(OlsFit {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        rss: resid.norm_squared(),
        rows,
    })
}

fn aic(fit: &OlsFit, p: usize) -> f64 {
    let m = fit.rows as f64;
    m * (fit.rss / m).max(f64::MIN_POSITIVE).ln() + 2.0 * (p as f64 + 1.0)
}

/// Least-squares AR(p) fit of `Z_t` on `(1, Z_{t-1}, ..., Z_{t-p})`.
///
/// `order = 0` selects `p` in `1..=12` by AIC, comparing all candidates on
/// the same effective sample; the chosen order is then refitted on all data.
pub fn ar_fit_values(values: &[f64], order: usize) -> Result<ArModel> {
    let n = values.len();
    let p = if order == 0 {
        let max_p = AR_MAX_ORDER.min(n.saturating_sub(1) / 10);
        if max_p == 0 {
            return Err(Error::InsufficientData(format!(
                "AR order selection needs more than 10 observations, got {n}"
            )));
        }
        let mut best = (f64::INFINITY, 0);
        for p in 1..=max_p {
            let score = aic(&ols_ar(values, p, max_p)?, p);
            if score < best.0 {
                best = (score, p);
            }
        }
        best.1
    } else {
        order
    };
    if n <= 10 * p {
        return Err(Error::InsufficientData(format!(
            "AR({p}) needs more than {} observations, got {n}",
            10 * p
        )));
    }
    let fit = ols_ar(values, p, p)?;
    let dof = (fit.rows - p - 1).max(1) as f64;
    Ok(ArModel {
        order: p,
        aic: aic(&fit, p),
        intercept: fit.intercept,
        noise_variance: fit.rss / dof,
        coefficients: fit.coefficients,
    })
}

pub fn ar_fit(series: &TimeSeries, order: usize) -> Result<ArModel> {
    ar_fit_values(series.values(), order)
}

/// Iterated one-step conditional-mean forecasts.
pub fn ar_forecast(model: &ArModel, history: &[f64], steps: usize) -> Result<Vec<f64>> {
    if history.len() < model.order {
        return Err(Error::InsufficientData(format!(
            "AR({}) forecast needs {} past values, got {}",
            model.order,
            model.order,
            history.len()
        )));
    }
    let mut buf: Vec<f64> = history[history.len() - model.order..].to_vec();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let next = model.intercept
            + model
                .coefficients
                .iter()
                .enumerate()
                .map(|(j, phi)| phi * buf[buf.len() - 1 - j])
                .sum::<f64>();
        buf.push(next);
        out.push(next);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Shared configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum MetricChoice {
    L2,
    /// FPCA semi-metric; `q = None` picks the smallest `q` explaining 90%.
    Fpca { q: Option<usize> },
}

impl MetricChoice {
    fn fit(self, curves: &[Vec<f64>]) -> Result<SemiMetric> {
        match self {
            MetricChoice::L2 => Ok(SemiMetric::L2),
            MetricChoice::Fpca { q: Some(q) } => fit_fpca(curves, q),
            MetricChoice::Fpca { q: None } => fit_fpca_auto(curves, DEFAULT_EXPLAINED_VARIANCE),
        }
    }
}

/// How the functional bandwidths were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthChoice {
    pub h: f64,
    pub g: f64,
    /// `"validation"`, `"override"`, or `"validation+override"`.
    pub source: String,
    pub validation_error: Option<f64>,
}

fn choose_bandwidths(
    curves: &[Vec<f64>],
    metric: &SemiMetric,
    h: Option<f64>,
    g: Option<f64>,
) -> Result<BandwidthChoice> {
    for (name, v) in [("h", h), ("g", g)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("bandwidth {name} must be positive, got {v}")));
            }
        }
    }
    if let (Some(h), Some(g)) = (h, g) {
        return Ok(BandwidthChoice {
            h,
            g,
            source: "override".into(),
            validation_error: None,
        });
    }
    if curves.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "bandwidth validation needs at least 3 curves, got {}; pass both bandwidths explicitly",
            curves.len()
        )));
    }
    let tuned = tune_bandwidths(curves, metric)?;
    let overridden = h.is_some() || g.is_some();
    Ok(BandwidthChoice {
        h: h.unwrap_or(tuned.h),
        g: g.unwrap_or(tuned.g),
        source: if overridden { "validation+override" } else { "validation" }.into(),
        validation_error: Some(tuned.validation_error),
    })
}

fn curve_points(sample: &crate::data::CurveSample) -> Vec<Vec<f64>> {
    sample.curves().iter().map(|c| c.points.clone()).collect()
}

// ---------------------------------------------------------------------------
// Monthly prediction experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ForecastMethod {
    #[serde(rename = "NFDA-median")]
    NfdaMedian,
    #[serde(rename = "NFDA-regression")]
    NfdaRegression,
    #[serde(rename = "AR-baseline")]
    ArBaseline,
}

impl ForecastMethod {
    pub const ALL: [ForecastMethod; 3] = [
        ForecastMethod::NfdaMedian,
        ForecastMethod::NfdaRegression,
        ForecastMethod::ArBaseline,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ForecastMethod::NfdaMedian => "NFDA-median",
            ForecastMethod::NfdaRegression => "NFDA-regression",
            ForecastMethod::ArBaseline => "AR-baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionConfig {
    pub metric: MetricChoice,
    pub h: Option<f64>,
    pub g: Option<f64>,
    pub methods: Vec<ForecastMethod>,
    /// AR order; 0 selects it by AIC.
    pub ar_order: usize,
    /// Train the final prediction on the pair (penultimate year, last known
    /// year) as well as all earlier pairs.
    pub include_latest_pair: bool,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        Self {
            metric: MetricChoice::Fpca { q: None },
            h: None,
            g: None,
            methods: ForecastMethod::ALL.to_vec(),
            ar_order: 0,
            include_latest_pair: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodPrediction {
    pub method: ForecastMethod,
    pub predictions: Vec<f64>,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    /// `YYYY-MM` stamps of the predicted year.
    pub months: Vec<String>,
    /// Observed log-flows of the predicted year.
    pub truth: Vec<f64>,
    pub methods: Vec<MethodPrediction>,
    pub bandwidths: Option<BandwidthChoice>,
    pub metric: Option<MetricSummary>,
    pub ar_model: Option<ArModel>,
    pub training_years: usize,
    pub training_pairs: Option<usize>,
    pub notes: Vec<String>,
}

pub fn mean_squared_error(predictions: &[f64], truth: &[f64]) -> f64 {
    predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / truth.len() as f64
}

impl PredictionReport {
    pub fn method(&self, method: ForecastMethod) -> Option<&MethodPrediction> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn mse(&self, method: ForecastMethod) -> Option<f64> {
        self.method(method).map(|m| m.mse)
    }

    /// Aligned-column table for terminals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<8} {:>10}", "month", "observed");
        for m in &self.methods {
            let _ = write!(out, " {:>16}", m.method.label());
        }
        out.push('\n');
        for (i, month) in self.months.iter().enumerate() {
            let _ = write!(out, "{:<8} {:>10.4}", month, self.truth[i]);
            for m in &self.methods {
                let _ = write!(out, " {:>16.4}", m.predictions[i]);
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<8} {:>10}", "MSE", "");
        for m in &self.methods {
            let _ = write!(out, " {:>16.4}", m.mse);
        }
        out.push('\n');
        if let Some(b) = &self.bandwidths {
            let _ = writeln!(out, "bandwidths: h = {:.6}, g = {:.6} ({})", b.h, b.g, b.source);
        }
        if let Some(m) = &self.metric {
            match m.q {
                Some(q) => {
                    let _ = writeln!(
                        out,
                        "semi-metric: FPCA, q = {q} ({:.1}% variance)",
                        100.0 * m.explained_variance.unwrap_or(f64::NAN)
                    );
                }
                None => {
                    let _ = writeln!(out, "semi-metric: L2");
                }
            }
        }
        if let Some(ar) = &self.ar_model {
            let _ = writeln!(out, "AR-baseline order p = {}", ar.order);
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

/// Predicts the final year of a monthly series from all previous years.
///
/// Errors are on the natural-log scale. With no bandwidth overrides,
/// `(h, g)` are tuned by holding out the last known year.
pub fn run_prediction_experiment(series: &TimeSeries, config: &PredictionConfig) -> Result<PredictionReport> {
    if series.cadence() != Cadence::Monthly {
        return Err(Error::InvalidArgument("prediction experiment needs a monthly series".into()));
    }
    if config.methods.is_empty() {
        return Err(Error::InvalidArgument("no prediction method selected".into()));
    }
    let mut notes = Vec::new();
    let logged = match series.scale() {
        Scale::Raw => log_transform(series)?,
        Scale::NaturalLog => series.clone(),
    };
    if logged.len() < 36 {
        return Err(Error::InsufficientData(format!(
            "prediction needs at least 3 whole years of monthly data, got {} months",
            logged.len()
        )));
    }
    let sample = to_annual_curves(&logged)?;
    if sample.dropped() > 0 {
        notes.push(format!("dropped {} trailing months (partial year)", sample.dropped()));
    }
    let curves = curve_points(&sample);
    let n = curves.len();
    let known = &curves[..n - 1];
    let truth = curves[n - 1].clone();
    let months: Vec<String> = (0..12).map(|t| logged.stamp(12 * (n - 1) + t)).collect();

    let wants_nfda = config
        .methods
        .iter()
        .any(|m| matches!(m, ForecastMethod::NfdaMedian | ForecastMethod::NfdaRegression));

    let mut nfda = None;
    if wants_nfda {
        let metric = config.metric.fit(known)?;
        let bandwidths = choose_bandwidths(known, &metric, config.h, config.g)?;
        let query = &known[known.len() - 1];
        let forecaster = if config.include_latest_pair {
            CurveForecaster::from_sequence(known, metric.clone())?
        } else {
            if known.len() < 3 {
                return Err(Error::InsufficientData(
                    "excluding the latest pair needs at least 3 known years".into(),
                ));
            }
            notes.push("final prediction excludes the latest (penultimate, last known) pair".into());
            let k = known.len();
            CurveForecaster::new(&known[..k - 2], &known[1..k - 1], metric.clone())?
        };
        nfda = Some((metric, bandwidths, forecaster, query.clone()));
    }

    let mut methods = Vec::new();
    let mut ar_model = None;
    for &method in &config.methods {
        let predictions = match method {
            ForecastMethod::NfdaMedian | ForecastMethod::NfdaRegression => {
                let (_, b, forecaster, query) = nfda.as_ref().expect("NFDA state prepared");
                let predictor = if method == ForecastMethod::NfdaMedian {
                    Predictor::Median
                } else {
                    Predictor::Regression
                };
                forecaster.predict(query, predictor, b.h, b.g)?
            }
            ForecastMethod::ArBaseline => {
                let history: Vec<f64> = known.iter().flatten().copied().collect();
                let model = ar_fit_values(&history, config.ar_order)?;
                let forecast = ar_forecast(&model, &history, 12)?;
                ar_model = Some(model);
                forecast
            }
        };
        let mse = mean_squared_error(&predictions, &truth);
        methods.push(MethodPrediction {
            method,
            predictions,
            mse,
        });
    }

    let (metric, bandwidths, training_pairs) = match nfda {
        Some((metric, b, forecaster, _)) => (Some(metric.summary()), Some(b), Some(forecaster.pair_count())),
        None => (None, None, None),
    };
    Ok(PredictionReport {
        months,
        truth,
        methods,
        bandwidths,
        metric,
        ar_model,
        training_years: n - 1,
        training_pairs,
        notes,
    })
}

// ---------------------------------------------------------------------------
// Extreme-value experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuantileMethod {
    #[serde(rename = "GEV")]
    Gev,
    #[serde(rename = "kernel")]
    Kernel,
    #[serde(rename = "NFDA")]
    Nfda,
}

impl QuantileMethod {
    pub const ALL: [QuantileMethod; 3] = [QuantileMethod::Gev, QuantileMethod::Kernel, QuantileMethod::Nfda];

    pub fn label(self) -> &'static str {
        match self {
            QuantileMethod::Gev => "GEV",
            QuantileMethod::Kernel => "kernel",
            QuantileMethod::Nfda => "NFDA",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeConfig {
    pub metric: MetricChoice,
    /// Functional bandwidth overrides.
    pub h: Option<f64>,
    pub g: Option<f64>,
    /// Scalar kernel bandwidth override (cross-validated when `None`).
    pub kernel_bandwidth: Option<f64>,
    pub methods: Vec<QuantileMethod>,
    pub levels: usize,
    pub gev_max_iterations: usize,
    /// Scale on which the functional conditional quantiles are estimated.
    /// On the log scale each daily quantile is mapped back with `exp`
    /// before averaging, so estimates are always in flow units.
    pub functional_scale: Scale,
}

impl Default for ExtremeConfig {
    fn default() -> Self {
        Self {
            metric: MetricChoice::Fpca { q: None },
            h: None,
            g: None,
            kernel_bandwidth: None,
            methods: QuantileMethod::ALL.to_vec(),
            levels: LEVEL_COUNT,
            gev_max_iterations: MLE_MAX_ITERATIONS,
            functional_scale: Scale::NaturalLog,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodQuantiles {
    pub method: QuantileMethod,
    /// One estimate per level; `None` for levels excluded from scoring.
    pub estimates: Vec<Option<f64>>,
    #[serde(with = "serde_float")]
    pub rmae: f64,
    /// False when the underlying fit did not converge.
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBandwidth {
    pub h: f64,
    pub source: String,
    pub criterion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSetup {
    pub bandwidths: BandwidthChoice,
    pub metric: MetricSummary,
    pub monthly_curves: usize,
    pub training_pairs: usize,
    pub query_month: String,
    pub resampling: String,
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileReport {
    pub final_year: i32,
    pub training_start: NaiveDate,
    pub training_end: NaiveDate,
    pub training_size: usize,
    pub levels: Vec<f64>,
    #[serde(with = "serde_float::vec")]
    pub return_periods: Vec<f64>,
    /// Levels whose empirical return period is finite and above 1.
    pub retained: Vec<bool>,
    pub methods: Vec<MethodQuantiles>,
    pub gev_fit: Option<GevFit>,
    pub kernel_bandwidth: Option<KernelBandwidth>,
    pub functional: Option<FunctionalSetup>,
    pub notes: Vec<String>,
}

/// Relative mean absolute error over the retained levels.
pub fn rmae(levels: &[f64], estimates: &[Option<f64>], retained: &[bool]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for ((c, est), keep) in levels.iter().zip(estimates).zip(retained) {
        if let (true, Some(e)) = (*keep, est) {
            total += (c - e).abs() / c;
            count += 1;
        }
    }
    if count == 0 {
        f64::NAN
    } else {
        total / count as f64
    }
}

impl QuantileReport {
    pub fn method(&self, method: QuantileMethod) -> Option<&MethodQuantiles> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn rmae(&self, method: QuantileMethod) -> Option<f64> {
        self.method(method).map(|m| m.rmae)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "training {} .. {} ({} days), evaluated on {}",
            self.training_start, self.training_end, self.training_size, self.final_year
        );
        let _ = write!(out, "{:>5} {:>12} {:>10}", "level", "c_i", "RT(c_i)");
        for m in &self.methods {
            let _ = write!(out, " {:>12}", m.method.label());
        }
        out.push('\n');
        for i in 0..self.levels.len() {
            let _ = write!(
                out,
                "{:>5} {:>12.4} {:>10}",
                i + 1,
                self.levels[i],
                serde_float::format((self.return_periods[i] * 1e4).round() / 1e4)
            );
            for m in &self.methods {
                match m.estimates[i] {
                    Some(v) => {
                        let _ = write!(out, " {:>12.4}", v);
                    }
                    None => {
                        let _ = write!(out, " {:>12}", "-");
                    }
                }
            }
            out.push('\n');
        }
        let _ = write!(out, "{:>5} {:>12} {:>10}", "RMAE", "", "");
        for m in &self.methods {
            let flag = if m.reliable { "" } else { "*" };
            let _ = write!(out, " {:>12}", format!("{:.4}{flag}", m.rmae));
        }
        out.push('\n');
        if self.methods.iter().any(|m| !m.reliable) {
            let _ = writeln!(out, "* fit did not converge; column unreliable");
        }
        if let Some(k) = &self.kernel_bandwidth {
            let _ = writeln!(out, "kernel bandwidth h = {:.4} ({})", k.h, k.source);
        }
        if let Some(f) = &self.functional {
            let _ = writeln!(
                out,
                "functional bandwidths h = {:.6}, g = {:.6} ({}), {} scale, query month {}",
                f.bandwidths.h,
                f.bandwidths.g,
                f.bandwidths.source,
                match f.scale {
                    Scale::Raw => "raw",
                    Scale::NaturalLog => "log",
                },
                f.query_month
            );
        }
        if let Some(fit) = &self.gev_fit {
            let _ = writeln!(
                out,
                "GEV mu = {:.4}, sigma = {:.4}, gamma = {:.4}, converged = {}",
                fit.params.mu, fit.params.sigma, fit.params.gamma, fit.converged
            );
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

/// Resampling rule recorded in report provenance.
pub const MONTH_RESAMPLING: &str =
    "months with m < 31 days linearly interpolated at positions 1 + (m - 1)(j - 1)/30, j = 1..31";

/// Compares GEV, scalar-kernel and functional flow-quantile estimates
/// against the empirical return periods of the final calendar year.
pub fn run_extreme_experiment(daily: &TimeSeries, config: &ExtremeConfig) -> Result<QuantileReport> {
    if daily.cadence() != Cadence::Daily {
        return Err(Error::InvalidArgument("extreme-value experiment needs a daily series".into()));
    }
    if config.methods.is_empty() {
        return Err(Error::InvalidArgument("no quantile method selected".into()));
    }
    let last = daily.end();
    let final_year = last.year();
    let year_start = NaiveDate::from_ymd_opt(final_year, 1, 1).expect("valid date");
    let next_year = NaiveDate::from_ymd_opt(final_year + 1, 1, 1).expect("valid date");
    if last.month() != 12 || last.day() != 31 || daily.start() > year_start {
        return Err(Error::InsufficientData(format!(
            "final year {final_year} is incomplete (series ends {last})"
        )));
    }
    let training = daily
        .slice_dates(daily.start(), year_start)
        .ok_or_else(|| Error::InsufficientData("no data before the final year".into()))?;
    let evaluation = daily.slice_dates(year_start, next_year).expect("final year present");
    if training.len() < 730 {
        return Err(Error::InsufficientData(format!(
            "need at least two years before {final_year}, got {} days",
            training.len()
        )));
    }

    let mut notes = Vec::new();
    let sample = training.values();
    let levels = levels_grid_n(sample, config.levels)?;
    let return_periods: Vec<f64> = levels
        .iter()
        .map(|&c| empirical_return_period(evaluation.values(), c))
        .collect();
    let retained: Vec<bool> = return_periods.iter().map(|rt| rt.is_finite() && *rt > 1.0).collect();
    for (i, rt) in return_periods.iter().enumerate() {
        if !rt.is_finite() {
            notes.push(format!(
                "level {} ({:.4}) never exceeded in {final_year}: infinite return period, excluded from RMAE",
                i + 1,
                levels[i]
            ));
        } else if *rt <= 1.0 {
            notes.push(format!(
                "level {} ({:.4}) exceeded every day of {final_year}: return period 1, excluded from RMAE",
                i + 1,
                levels[i]
            ));
        }
    }
    let excluded = retained.iter().filter(|k| !**k).count();
    if excluded > 0 {
        notes.push(format!("RMAE averages over {} of {} levels", levels.len() - excluded, levels.len()));
    }
    let probs: Vec<Option<f64>> = return_periods
        .iter()
        .zip(&retained)
        .map(|(rt, keep)| keep.then(|| 1.0 - 1.0 / rt))
        .collect();

    let mut methods = Vec::new();
    let mut gev_fit = None;
    let mut kernel_bandwidth = None;
    let mut functional = None;
    for &method in &config.methods {
        let (estimates, reliable): (Vec<Option<f64>>, bool) = match method {
            QuantileMethod::Gev => {
                let fit = gev_fit_mle_limited(sample, config.gev_max_iterations)?;
                if !fit.converged {
                    notes.push("GEV likelihood optimisation did not converge; GEV column unreliable".into());
                }
                let est = probs
                    .iter()
                    .map(|p| p.map(|p| fit.params.quantile(p)).transpose())
                    .collect::<Result<_>>()?;
                let reliable = fit.converged;
                gev_fit = Some(fit);
                (est, reliable)
            }
            QuantileMethod::Kernel => {
                let (h, source) = match config.kernel_bandwidth {
                    Some(h) => (h, "override".to_string()),
                    None => (cv_profile(sample)?.selected, "cross-validation".to_string()),
                };
                let model = KernelCdfModel::new(sample, h)?;
                let est = return_periods
                    .iter()
                    .zip(&retained)
                    .map(|(rt, keep)| if *keep { model.flow_quantile(*rt).map(Some) } else { Ok(None) })
                    .collect::<Result<_>>()?;
                kernel_bandwidth = Some(KernelBandwidth {
                    h,
                    source,
                    criterion: CV_CRITERION.to_string(),
                });
                (est, true)
            }
            QuantileMethod::Nfda => {
                let curve_sample = match config.functional_scale {
                    Scale::Raw => to_monthly_curves(&training)?,
                    Scale::NaturalLog => to_monthly_curves(&log_transform(&training)?)?,
                };
                let curves = curve_points(&curve_sample);
                let n = curves.len();
                if n < 3 {
                    return Err(Error::InsufficientData(format!(
                        "functional quantiles need at least 3 whole months, got {n}"
                    )));
                }
                let metric = config.metric.fit(&curves)?;
                let bandwidths = choose_bandwidths(&curves, &metric, config.h, config.g)?;
                // Pairs (χ_j, χ_{j+1}) up to the penultimate month, which is the query.
                let forecaster = CurveForecaster::from_sequence(&curves[..n - 1], metric.clone())?;
                let query = &curves[n - 2];
                let est = probs
                    .iter()
                    .map(|p| match p {
                        Some(alpha) => {
                            let mut daily = forecaster.quantile_curve(query, *alpha, bandwidths.h, bandwidths.g)?;
                            if config.functional_scale == Scale::NaturalLog {
                                daily.iter_mut().for_each(|v| *v = v.exp());
                            }
                            Ok(Some(daily.iter().sum::<f64>() / daily.len() as f64))
                        }
                        None => Ok(None),
                    })
                    .collect::<Result<_>>()?;
                functional = Some(FunctionalSetup {
                    bandwidths,
                    metric: metric.summary(),
                    monthly_curves: n,
                    training_pairs: forecaster.pair_count(),
                    query_month: curve_sample.curves()[n - 2].start.format("%Y-%m").to_string(),
                    resampling: MONTH_RESAMPLING.to_string(),
                    scale: config.functional_scale,
                });
                (est, true)
            }
        };
        let score = rmae(&levels, &estimates, &retained);
        methods.push(MethodQuantiles {
            method,
            estimates,
            rmae: score,
            reliable,
        });
    }

    Ok(QuantileReport {
        final_year,
        training_start: training.start(),
        training_end: training.end(),
        training_size: training.len(),
        levels,
        return_periods,
        retained,
        methods,
        gev_fit,
        kernel_bandwidth,
        functional,
        notes,
    })
}

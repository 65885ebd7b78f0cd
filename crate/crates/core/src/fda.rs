//! Functional kernel estimators on curves.
//!
//! Training curves are compared to a query curve through a semi-metric
//! (plain L2, or L2 on the leading FPCA scores). Distances become weights
//! `K(d / h) / Σ K(d / h)` with the asymmetric Epanechnikov kernel; the
//! weights then drive either a smoothed conditional CDF
//! `F(y | χ) = Σ w_i H((y - Y_i) / g)`, its quantiles (the conditional
//! median is the point predictor), or a kernel regression `Σ w_i Y_i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{quantile_sorted, CurveSample};
use crate::error::{Error, Result};
use crate::kernels::{asymmetric_epanechnikov, integrated_epanechnikov};
use crate::linalg::jacobi_eigen;
use crate::numeric::invert_monotone;

pub const QUANTILE_TOL: f64 = 1e-10;
pub const QUANTILE_MAX_ITER: usize = 200;
/// Default share of variance the automatic FPCA component count must reach.
pub const DEFAULT_EXPLAINED_VARIANCE: f64 = 0.9;

// ---------------------------------------------------------------------------
// Semi-metrics
// ---------------------------------------------------------------------------

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean distance between two discretised curves.
pub fn semimetric_l2(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    Ok(euclidean(a, b))
}

/// Leading eigenvectors of the empirical covariance of a curve sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaBasis {
    /// Pointwise mean of the fitted curves.
    pub mean: Vec<f64>,
    /// All `p` covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// The `q` retained orthonormal eigenvectors, each of length `p`.
    pub components: Vec<Vec<f64>>,
}

impl FpcaBasis {
    pub fn q(&self) -> usize {
        self.components.len()
    }

    pub fn curve_len(&self) -> usize {
        self.mean.len()
    }

    /// Share of total variance carried by the retained components.
    pub fn explained_variance(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.eigenvalues[..self.q()].iter().map(|v| v.max(0.0)).sum::<f64>() / total
    }

    /// Scores `<x, e_k>` of a curve on the retained components.
    pub fn scores(&self, curve: &[f64]) -> Vec<f64> {
        self.components.iter().map(|e| dot(curve, e)).collect()
    }

    /// Back-projection `mean + Σ_k <x - mean, e_k> e_k`.
    pub fn reconstruct(&self, curve: &[f64]) -> Vec<f64> {
        let centred: Vec<f64> = curve.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        let mut out = self.mean.clone();
        for e in &self.components {
            let s = dot(&centred, e);
            for (o, ek) in out.iter_mut().zip(e) {
                *o += s * ek;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    L2,
    Fpca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SemiMetric {
    L2,
    Fpca(FpcaBasis),
}

impl SemiMetric {
    pub fn kind(&self) -> MetricKind {
        match self {
            SemiMetric::L2 => MetricKind::L2,
            SemiMetric::Fpca(_) => MetricKind::Fpca,
        }
    }

    pub fn q(&self) -> Option<usize> {
        match self {
            SemiMetric::L2 => None,
            SemiMetric::Fpca(b) => Some(b.q()),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            SemiMetric::L2 => semimetric_l2(a, b),
            SemiMetric::Fpca(basis) => semimetric_fpca(basis, a, b),
        }
    }

    /// Coordinates in which this semi-metric is plain Euclidean distance.
    pub fn coordinates(&self, curve: &[f64]) -> Result<Vec<f64>> {
        match self {
            SemiMetric::L2 => Ok(curve.to_vec()),
            SemiMetric::Fpca(basis) => {
                check_lengths(&basis.mean, curve)?;
                Ok(basis.scores(curve))
            }
        }
    }

    pub fn summary(&self) -> MetricSummary {
        match self {
            SemiMetric::L2 => MetricSummary {
                kind: MetricKind::L2,
                q: None,
                explained_variance: None,
            },
            SemiMetric::Fpca(b) => MetricSummary {
                kind: MetricKind::Fpca,
                q: Some(b.q()),
                explained_variance: Some(b.explained_variance()),
            },
        }
    }
}

/// Serializable description of the semi-metric used in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub kind: MetricKind,
    pub q: Option<usize>,
    pub explained_variance: Option<f64>,
}

/// Distance between the projections of `a` and `b` on the FPCA components.
pub fn semimetric_fpca(basis: &FpcaBasis, a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(&basis.mean, a)?;
    check_lengths(a, b)?;
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(basis
        .components
        .iter()
        .map(|e| dot(&diff, e).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Mean curve, eigenvalues and eigenvectors of the sample covariance.
type Eigen = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

fn covariance_eigen(curves: &[Vec<f64>]) -> Result<Eigen> {
    let n = curves.len();
    let p = curves.first().map_or(0, Vec::len);
    if p == 0 {
        return Err(Error::InsufficientData("curves are empty".into()));
    }
    if let Some(bad) = curves.iter().find(|c| c.len() != p) {
        return Err(Error::LengthMismatch {
            expected: p,
            found: bad.len(),
        });
    }
    let mean: Vec<f64> = (0..p)
        .map(|t| curves.iter().map(|c| c[t]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![0.0; p * p];
    for c in curves {
        for s in 0..p {
            let ds = c[s] - mean[s];
            for t in s..p {
                cov[s * p + t] += ds * (c[t] - mean[t]);
            }
        }
    }
    for s in 0..p {
        for t in s..p {
            let v = cov[s * p + t] / n as f64;
            cov[s * p + t] = v;
            cov[t * p + s] = v;
        }
    }
    let eig = jacobi_eigen(&cov, p)?;
    // Sign convention: the largest-magnitude entry of each eigenvector is positive.
    let vectors = eig
        .vectors
        .into_iter()
        .map(|v| {
            let pivot = v
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if pivot < 0.0 {
                v.into_iter().map(|x| -x).collect()
            } else {
                v
            }
        })
        .collect();
    Ok((mean, eig.values, vectors))
}

/// Fits an FPCA semi-metric keeping `q` components.
pub fn fit_fpca(curves: &[Vec<f64>], q: usize) -> Result<SemiMetric> {
    let p = curves.first().map_or(0, Vec::len);
    if q == 0 || q > p {
        return Err(Error::InvalidArgument(format!("q must be in 1..={p}, got {q}")));
    }
    if curves.len() < q + 1 {
        return Err(Error::InsufficientData(format!(
            "FPCA with q = {q} needs at least {} curves, got {}",
            q + 1,
            curves.len()
        )));
    }
    let (mean, eigenvalues, mut vectors) = covariance_eigen(curves)?;
    vectors.truncate(q);
    Ok(SemiMetric::Fpca(FpcaBasis {
        mean,
        eigenvalues,
        components: vectors,
    }))
}

/// Fits an FPCA semi-metric with the smallest `q` whose components carry
/// at least `threshold` of the total variance.
pub fn fit_fpca_auto(curves: &[Vec<f64>], threshold: f64) -> Result<SemiMetric> {
    let (_, eigenvalues, _) = covariance_eigen(curves)?;
    let total: f64 = eigenvalues.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("curves have zero total variance".into()));
    }
    let mut acc = 0.0;
    let mut q = eigenvalues.len();
    for (k, v) in eigenvalues.iter().enumerate() {
        acc += v.max(0.0);
        if acc / total >= threshold {
            q = k + 1;
            break;
        }
    }
    let q = q.min(curves.len().saturating_sub(1)).max(1);
    fit_fpca(curves, q)
}

/// Convenience wrapper taking a [`CurveSample`].
pub fn fit_fpca_sample(sample: &CurveSample, q: Option<usize>) -> Result<SemiMetric> {
    let curves: Vec<Vec<f64>> = sample.curves().iter().map(|c| c.points.clone()).collect();
    match q {
        Some(q) => fit_fpca(&curves, q),
        None => fit_fpca_auto(&curves, DEFAULT_EXPLAINED_VARIANCE),
    }
}

// ---------------------------------------------------------------------------
// Weighted estimators
// ---------------------------------------------------------------------------

/// Normalised kernel weights `K(d_i / h) / Σ_j K(d_j / h)`.
pub fn kernel_weights(distances: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth h must be positive, got {h}")));
    }
    let raw: Vec<f64> = distances.iter().map(|d| asymmetric_epanechnikov(d / h)).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        let min_distance = distances.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(Error::EmptyNeighbourhood {
            bandwidth: h,
            min_distance,
        });
    }
    let weights: Vec<f64> = raw.into_iter().map(|k| k / total).collect();
    debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    Ok(weights)
}

/// `Σ w_i H((y - Y_i) / g)`.
pub fn weighted_cdf(weights: &[f64], responses: &[f64], g: f64, y: f64) -> f64 {
    weights
        .iter()
        .zip(responses)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, yi)| w * integrated_epanechnikov((y - yi) / g))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Inverse of [`weighted_cdf`] at level `alpha`, bracketed by
/// `[min Y - g, max Y + g]`.
pub fn weighted_quantile(weights: &[f64], responses: &[f64], g: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("quantile level must be in (0, 1), got {alpha}")));
    }
    let (lo, hi) = responses
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    Ok(invert_monotone(
        |y| weighted_cdf(weights, responses, g, y),
        alpha,
        lo - g,
        hi + g,
        QUANTILE_TOL,
        QUANTILE_MAX_ITER,
    ))
}

pub fn weighted_mean(weights: &[f64], responses: &[f64]) -> f64 {
    weights.iter().zip(responses).map(|(w, y)| w * y).sum()
}

fn validate_pairs(predictors: &[Vec<f64>], responses: &[f64]) -> Result<()> {
    if predictors.is_empty() {
        return Err(Error::InsufficientData("no training curves".into()));
    }
    if predictors.len() != responses.len() {
        return Err(Error::LengthMismatch {
            expected: predictors.len(),
            found: responses.len(),
        });
    }
    let p = predictors[0].len();
    if let Some(bad) = predictors.iter().find(|c| c.len() != p) {
        return Err(Error::LengthMismatch {
            expected: p,
            found: bad.len(),
        });
    }
    Ok(())
}

fn check_bandwidth(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth {name} must be positive, got {value}")));
    }
    Ok(())
}

/// Shared neighbourhood machinery: projected predictors plus curve bandwidth.
#[derive(Debug, Clone)]
struct Neighbourhood {
    metric: SemiMetric,
    coords: Vec<Vec<f64>>,
    h: f64,
}

impl Neighbourhood {
    fn new(predictors: &[Vec<f64>], metric: SemiMetric, h: f64) -> Result<Self> {
        check_bandwidth("h", h)?;
        let coords = predictors
            .iter()
            .map(|c| metric.coordinates(c))
            .collect::<Result<_>>()?;
        Ok(Self { metric, coords, h })
    }

    fn distances(&self, query: &[f64]) -> Result<Vec<f64>> {
        let q = self.metric.coordinates(query)?;
        Ok(self.coords.iter().map(|c| euclidean(c, &q)).collect())
    }

    fn weights(&self, query: &[f64]) -> Result<Vec<f64>> {
        kernel_weights(&self.distances(query)?, self.h)
    }
}

/// Kernel estimate of the conditional distribution of a scalar response
/// given a curve.
#[derive(Debug, Clone)]
pub struct FunctionalCdfModel {
    neighbourhood: Neighbourhood,
    responses: Vec<f64>,
    g: f64,
}

impl FunctionalCdfModel {
    pub fn new(predictors: &[Vec<f64>], responses: &[f64], metric: SemiMetric, h: f64, g: f64) -> Result<Self> {
        validate_pairs(predictors, responses)?;
        check_bandwidth("g", g)?;
        Ok(Self {
            neighbourhood: Neighbourhood::new(predictors, metric, h)?,
            responses: responses.to_vec(),
            g,
        })
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn h(&self) -> f64 {
        self.neighbourhood.h
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn metric(&self) -> &SemiMetric {
        &self.neighbourhood.metric
    }

    /// Normalised weights of the training curves for `query`.
    pub fn weights(&self, query: &[f64]) -> Result<Vec<f64>> {
        self.neighbourhood.weights(query)
    }

    pub fn conditional_cdf(&self, query: &[f64], y: f64) -> Result<f64> {
        let w = self.weights(query)?;
        Ok(weighted_cdf(&w, &self.responses, self.g, y))
    }

    pub fn conditional_quantile(&self, query: &[f64], alpha: f64) -> Result<f64> {
        let w = self.weights(query)?;
        weighted_quantile(&w, &self.responses, self.g, alpha)
    }

    pub fn conditional_median(&self, query: &[f64]) -> Result<f64> {
        self.conditional_quantile(query, 0.5)
    }
}

/// Functional Nadaraya–Watson regression of a scalar response on a curve.
#[derive(Debug, Clone)]
pub struct FunctionalRegModel {
    neighbourhood: Neighbourhood,
    responses: Vec<f64>,
}

impl FunctionalRegModel {
    pub fn new(predictors: &[Vec<f64>], responses: &[f64], metric: SemiMetric, h: f64) -> Result<Self> {
        validate_pairs(predictors, responses)?;
        Ok(Self {
            neighbourhood: Neighbourhood::new(predictors, metric, h)?,
            responses: responses.to_vec(),
        })
    }

    pub fn weights(&self, query: &[f64]) -> Result<Vec<f64>> {
        self.neighbourhood.weights(query)
    }

    pub fn predict(&self, query: &[f64]) -> Result<f64> {
        let w = self.weights(query)?;
        Ok(weighted_mean(&w, &self.responses))
    }
}

// ---------------------------------------------------------------------------
// Curve-to-next-curve forecasting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Predictor {
    /// Conditional median of the kernel CDF estimate.
    Median,
    /// Functional kernel regression (conditional mean).
    Regression,
}

/// Training pairs `(χ_i, χ_{i+1})`: each curve predicts every point of its
/// successor, one scalar response per position `δ`.
#[derive(Debug, Clone)]
pub struct CurveForecaster {
    neighbourhood_metric: SemiMetric,
    coords: Vec<Vec<f64>>,
    /// `successors[i][δ]` is the response for predictor `i` at position `δ`.
    successors: Vec<Vec<f64>>,
    curve_len: usize,
}

impl CurveForecaster {
    pub fn new(predictors: &[Vec<f64>], successors: &[Vec<f64>], metric: SemiMetric) -> Result<Self> {
        if predictors.is_empty() {
            return Err(Error::InsufficientData("no training pairs".into()));
        }
        if predictors.len() != successors.len() {
            return Err(Error::LengthMismatch {
                expected: predictors.len(),
                found: successors.len(),
            });
        }
        let curve_len = successors[0].len();
        if let Some(bad) = successors.iter().find(|c| c.len() != curve_len) {
            return Err(Error::LengthMismatch {
                expected: curve_len,
                found: bad.len(),
            });
        }
        let coords = predictors
            .iter()
            .map(|c| metric.coordinates(c))
            .collect::<Result<_>>()?;
        Ok(Self {
            neighbourhood_metric: metric,
            coords,
            successors: successors.to_vec(),
            curve_len,
        })
    }

    /// Pairs every curve of `curves` with the next one.
    pub fn from_sequence(curves: &[Vec<f64>], metric: SemiMetric) -> Result<Self> {
        if curves.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "forecasting needs at least 2 curves, got {}",
                curves.len()
            )));
        }
        let n = curves.len();
        Self::new(&curves[..n - 1], &curves[1..], metric)
    }

    pub fn pair_count(&self) -> usize {
        self.coords.len()
    }

    pub fn distances(&self, query: &[f64]) -> Result<Vec<f64>> {
        let q = self.neighbourhood_metric.coordinates(query)?;
        Ok(self.coords.iter().map(|c| euclidean(c, &q)).collect())
    }

    pub fn weights(&self, query: &[f64], h: f64) -> Result<Vec<f64>> {
        kernel_weights(&self.distances(query)?, h)
    }

    /// Responses at position `δ` across all training pairs.
    pub fn responses_at(&self, delta: usize) -> Vec<f64> {
        self.successors.iter().map(|s| s[delta]).collect()
    }

    fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.curve_len).map(|d| self.responses_at(d)).collect()
    }

    /// Predicts every position of the curve following `query`.
    pub fn predict(&self, query: &[f64], method: Predictor, h: f64, g: f64) -> Result<Vec<f64>> {
        let w = self.weights(query, h)?;
        predict_with_weights(&w, &self.columns(), method, g)
    }

    /// Conditional `alpha`-quantile at every position of the next curve.
    pub fn quantile_curve(&self, query: &[f64], alpha: f64, h: f64, g: f64) -> Result<Vec<f64>> {
        check_bandwidth("g", g)?;
        let w = self.weights(query, h)?;
        self.columns()
            .iter()
            .map(|col| weighted_quantile(&w, col, g, alpha))
            .collect()
    }
}

fn predict_with_weights(weights: &[f64], columns: &[Vec<f64>], method: Predictor, g: f64) -> Result<Vec<f64>> {
    match method {
        Predictor::Regression => Ok(columns.iter().map(|col| weighted_mean(weights, col)).collect()),
        Predictor::Median => {
            check_bandwidth("g", g)?;
            columns
                .iter()
                .map(|col| weighted_quantile(weights, col, g, 0.5))
                .collect()
        }
    }
}

/// Predicts the curve following the last one in `curves`, training on all
/// consecutive pairs.
pub fn predict_next_year(
    curves: &[Vec<f64>],
    method: Predictor,
    metric: &SemiMetric,
    h: f64,
    g: f64,
) -> Result<Vec<f64>> {
    let forecaster = CurveForecaster::from_sequence(curves, metric.clone())?;
    forecaster.predict(&curves[curves.len() - 1], method, h, g)
}

/// Outcome of the validation grid search over `(h, g)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedBandwidths {
    pub h: f64,
    pub g: f64,
    /// Sum of squared errors over the validation curve at `(h, g)`.
    pub validation_error: f64,
    pub h_grid: Vec<f64>,
    pub g_grid: Vec<f64>,
    /// `errors[i][j]` for `(h_grid[i], g_grid[j])`; `inf` where the
    /// neighbourhood of the validation query is empty.
    #[serde(with = "grid_errors")]
    pub errors: Vec<Vec<f64>>,
}

mod grid_errors {
    use serde::ser::{SerializeSeq, Serializer};
    use serde::{Deserialize, Deserializer};

    struct Row<'a>(&'a [f64]);

    impl serde::Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            crate::serde_float::vec::serialize(self.0, s)
        }
    }

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for r in rows {
            seq.serialize_element(&Row(r))?;
        }
        seq.end()
    }

    #[derive(Deserialize)]
    struct RowDe(#[serde(with = "crate::serde_float::vec")] Vec<f64>);

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        Ok(Vec::<RowDe>::deserialize(d)?.into_iter().map(|r| r.0).collect())
    }
}

/// Quantile levels 5%, 10%, ..., 100% used to build bandwidth grids.
pub fn grid_levels() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.05).collect()
}

fn positive_quantile_grid(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = grid_levels()
        .into_iter()
        .map(|p| quantile_sorted(&values, p))
        .filter(|v| *v > 0.0)
        .collect();
    grid.dedup();
    grid
}

/// Selects `(h, g)` by holding out the last curve: curves `0..n-2` and
/// their successors form the training pairs, curve `n-2` is the query and
/// curve `n-1` the validation target for the conditional-median predictor.
///
/// `h` ranges over the 5%..100% quantiles of pairwise distances among the
/// training predictors and the query; `g` over the same quantiles of the
/// pairwise response spreads `|Y_i(δ) - Y_j(δ)|`. Ties go to the smaller
/// `h`, then the smaller `g`.
pub fn tune_bandwidths(curves: &[Vec<f64>], metric: &SemiMetric) -> Result<TunedBandwidths> {
    let n = curves.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "bandwidth tuning needs at least 3 curves, got {n}"
        )));
    }
    let train = &curves[..n - 1];
    let target = &curves[n - 1];
    let query = &train[n - 2];
    let forecaster = CurveForecaster::from_sequence(train, metric.clone())?;

    let pts: Vec<Vec<f64>> = train
        .iter()
        .map(|c| metric.coordinates(c))
        .collect::<Result<_>>()?;
    let mut distances = Vec::new();
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            distances.push(euclidean(&pts[i], &pts[j]));
        }
    }
    let h_grid = positive_quantile_grid(distances);
    if h_grid.is_empty() {
        return Err(Error::Degenerate("all pairwise curve distances are zero".into()));
    }

    let columns = forecaster.columns();
    let mut spreads = Vec::new();
    for col in &columns {
        for i in 0..col.len() {
            for j in (i + 1)..col.len() {
                spreads.push((col[i] - col[j]).abs());
            }
        }
    }
    let g_grid = positive_quantile_grid(spreads);
    if g_grid.is_empty() {
        return Err(Error::Degenerate("all response spreads are zero".into()));
    }

    let query_distances = forecaster.distances(query)?;
    let errors: Vec<Vec<f64>> = h_grid
        .par_iter()
        .map(|&h| match kernel_weights(&query_distances, h) {
            Err(_) => vec![f64::INFINITY; g_grid.len()],
            Ok(w) => g_grid
                .iter()
                .map(|&g| {
                    predict_with_weights(&w, &columns, Predictor::Median, g)
                        .map(|pred| pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum())
                        .unwrap_or(f64::INFINITY)
                })
                .collect(),
        })
        .collect();

    let mut best: Option<(usize, usize)> = None;
    for (i, row) in errors.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if e.is_finite() && best.is_none_or(|(bi, bj)| *e < errors[bi][bj]) {
                best = Some((i, j));
            }
        }
    }
    let (bi, bj) = best.ok_or_else(|| {
        let min_distance = query_distances.iter().cloned().fold(f64::INFINITY, f64::min);
        Error::EmptyNeighbourhood {
            bandwidth: h_grid[h_grid.len() - 1],
            min_distance,
        }
    })?;
    Ok(TunedBandwidths {
        h: h_grid[bi],
        g: g_grid[bj],
        validation_error: errors[bi][bj],
        h_grid,
        g_grid,
        errors,
    })
}

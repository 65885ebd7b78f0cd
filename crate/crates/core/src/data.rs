//! Time-series ingestion (USGS NWIS RDB and CSV), transformation,
//! descriptive statistics, autocorrelation, and construction of curve
//! samples from a series.

use std::fmt;
use std::io::Read;

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cadence {
    Monthly,
    Daily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Raw,
    NaturalLog,
}

/// A regularly indexed scalar series without missing entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    start: NaiveDate,
    cadence: Cadence,
    scale: Scale,
}

impl TimeSeries {
    /// Builds a series; monthly series are anchored on the first day of
    /// their starting month.
    pub fn new(values: Vec<f64>, start: NaiveDate, cadence: Cadence, scale: Scale) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NoRecords);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain {
                index,
                message: format!("non-finite value {}", values[index]),
            });
        }
        let start = match cadence {
            Cadence::Monthly => start.with_day(1).expect("day 1 exists"),
            Cadence::Daily => start,
        };
        Ok(Self {
            values,
            start,
            cadence,
            scale,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn cadence(&self) -> Cadence {
        self.cadence
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    /// Calendar date of observation `i`.
    pub fn date_at(&self, i: usize) -> NaiveDate {
        match self.cadence {
            Cadence::Monthly => self.start + Months::new(i as u32),
            Cadence::Daily => self.start + chrono::Days::new(i as u64),
        }
    }

    pub fn end(&self) -> NaiveDate {
        self.date_at(self.len() - 1)
    }

    /// Human-readable stamp of observation `i` (`YYYY-MM` or `YYYY-MM-DD`).
    pub fn stamp(&self, i: usize) -> String {
        format_stamp(self.date_at(i), self.cadence)
    }

    /// Sub-series of the observations whose dates fall in `[from, to)`.
    pub fn slice_dates(&self, from: NaiveDate, to: NaiveDate) -> Option<TimeSeries> {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| {
                let d = self.date_at(i);
                d >= from && d < to
            })
            .collect();
        let first = *idx.first()?;
        let last = *idx.last()?;
        Some(TimeSeries {
            values: self.values[first..=last].to_vec(),
            start: self.date_at(first),
            cadence: self.cadence,
            scale: self.scale,
        })
    }

    /// Multiplies every value by `factor` (unit conversion, e.g. ft³/s to m³/s).
    pub fn scaled(&self, factor: f64) -> TimeSeries {
        TimeSeries {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

fn format_stamp(d: NaiveDate, cadence: Cadence) -> String {
    match cadence {
        Cadence::Monthly => d.format("%Y-%m").to_string(),
        Cadence::Daily => d.format("%Y-%m-%d").to_string(),
    }
}

/// Cubic feet per second to cubic metres per second.
pub const CFS_TO_CMS: f64 = 0.028_316_846_592;

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct RawRecord {
    line: usize,
    stamp: String,
    value: String,
}

#[derive(Debug, Clone, Copy)]
struct ParsedStamp {
    date: NaiveDate,
    has_day: bool,
}

fn parse_stamp(text: &str) -> Option<ParsedStamp> {
    let text = text.trim();
    // Instantaneous stamps like "2009-01-01 00:00" keep only their date.
    let date_part = text.split([' ', 'T']).next().unwrap_or(text);
    if let Ok(date) = NaiveDate::parse_from_str(date_part, "%Y-%m-%d") {
        return Some(ParsedStamp { date, has_day: true });
    }
    let mut parts = date_part.split('-');
    let year: i32 = parts.next()?.parse().ok()?;
    let month: u32 = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    NaiveDate::from_ymd_opt(year, month, 1).map(|date| ParsedStamp { date, has_day: false })
}

fn assemble(records: Vec<RawRecord>, column: &str) -> Result<TimeSeries> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let mut parsed = Vec::with_capacity(records.len());
    for rec in &records {
        let stamp = parse_stamp(&rec.stamp).ok_or_else(|| Error::Data {
            line: rec.line,
            message: format!("unparseable datetime {:?}", rec.stamp),
        })?;
        let value: f64 = rec.value.trim().parse().map_err(|_| Error::Data {
            line: rec.line,
            message: format!("non-numeric value {:?} in column {column}", rec.value),
        })?;
        if !value.is_finite() {
            return Err(Error::Data {
                line: rec.line,
                message: format!("non-finite value {:?} in column {column}", rec.value),
            });
        }
        parsed.push((stamp, value, rec.stamp.trim().to_string()));
    }
    parsed.sort_by_key(|(s, _, _)| s.date);
    if let Some(w) = parsed.windows(2).find(|w| w[0].0.date == w[1].0.date) {
        return Err(Error::DuplicateStamp(w[1].2.clone()));
    }

    let all_first_of_month = parsed.iter().all(|(s, _, _)| !s.has_day || s.date.day() == 1);
    let any_month_only = parsed.iter().any(|(s, _, _)| !s.has_day);
    let spaced_monthly = parsed
        .windows(2)
        .all(|w| (w[1].0.date - w[0].0.date).num_days() >= 28);
    let cadence = if all_first_of_month && (any_month_only || (parsed.len() > 1 && spaced_monthly)) {
        Cadence::Monthly
    } else {
        Cadence::Daily
    };

    let start = parsed[0].0.date;
    let mut missing = Vec::new();
    let mut expected = start;
    for (stamp, _, _) in &parsed {
        while expected < stamp.date {
            missing.push(format_stamp(expected, cadence));
            expected = step(expected, cadence);
        }
        expected = step(expected, cadence);
    }
    if !missing.is_empty() {
        return Err(Error::Gap { missing });
    }

    let values = parsed.into_iter().map(|(_, v, _)| v).collect();
    TimeSeries::new(values, start, cadence, Scale::Raw)
}

fn step(d: NaiveDate, cadence: Cadence) -> NaiveDate {
    match cadence {
        Cadence::Monthly => d + Months::new(1),
        Cadence::Daily => d.succ_opt().expect("date in range"),
    }
}

fn read_text(mut input: impl Read) -> Result<String> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf).map_err(|e| Error::Parse {
        line: 0,
        message: format!("read failure: {e}"),
    })?;
    String::from_utf8(buf).map_err(|e| Error::Parse {
        line: 0,
        message: format!("input is not UTF-8: {e}"),
    })
}

fn is_rdb_format_field(field: &str) -> bool {
    let field = field.trim();
    let digits = field.trim_end_matches(|c: char| c.is_ascii_alphabetic());
    let suffix = &field[digits.len()..];
    !digits.is_empty()
        && digits.chars().all(|c| c.is_ascii_digit())
        && matches!(suffix, "s" | "n" | "d" | "S" | "N" | "D")
}

/// Where the datetime of a record comes from.
enum StampSource {
    Column(usize),
    /// NWIS statistics-service layout: separate year and month columns.
    YearMonth(usize, usize),
}

fn stamp_source(header: &[&str]) -> Option<StampSource> {
    let find = |name: &str| header.iter().position(|h| h.eq_ignore_ascii_case(name));
    find("datetime")
        .or_else(|| find("date"))
        .map(StampSource::Column)
        .or_else(|| Some(StampSource::YearMonth(find("year_nu")?, find("month_nu")?)))
}

/// Parses a USGS NWIS RDB document and extracts `value_column`.
///
/// The date is taken from a `datetime` (or `date`) column, or from the
/// `year_nu`/`month_nu` pair used by NWIS monthly statistics downloads.
pub fn ingest_nwis_rdb(input: impl Read, value_column: &str) -> Result<TimeSeries> {
    let text = read_text(input)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());

    let (header_line, header) = lines.next().ok_or(Error::NoRecords)?;
    let header: Vec<&str> = header.split('\t').map(str::trim).collect();
    if header.len() < 2 {
        return Err(Error::Parse {
            line: header_line,
            message: "header row must contain at least two tab-separated columns".into(),
        });
    }
    let (format_line, format_row) = lines.next().ok_or(Error::Parse {
        line: header_line,
        message: "missing format row after header".into(),
    })?;
    let formats: Vec<&str> = format_row.split('\t').collect();
    if formats.len() != header.len() || !formats.iter().all(|f| is_rdb_format_field(f)) {
        return Err(Error::Parse {
            line: format_line,
            message: format!("malformed format row {format_row:?}"),
        });
    }
    let value_idx = header.iter().position(|h| *h == value_column).ok_or_else(|| Error::Parse {
        line: header_line,
        message: format!("value column {value_column:?} not in header"),
    })?;
    let source = stamp_source(&header).ok_or_else(|| Error::Parse {
        line: header_line,
        message: "no datetime column (expected `datetime`, `date`, or `year_nu` + `month_nu`)".into(),
    })?;

    let mut records = Vec::new();
    for (line, row) in lines {
        let fields: Vec<&str> = row.split('\t').collect();
        if fields.len() != header.len() {
            return Err(Error::Data {
                line,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        let stamp = match source {
            StampSource::Column(i) => fields[i].trim().to_string(),
            StampSource::YearMonth(y, m) => {
                format!("{}-{:0>2}", fields[y].trim(), fields[m].trim())
            }
        };
        records.push(RawRecord {
            line,
            stamp,
            value: fields[value_idx].to_string(),
        });
    }
    assemble(records, value_column)
}

/// Parses a CSV document with a header row, a datetime column (named
/// `date`/`datetime`, or else the first non-value column) and `value_column`.
pub fn ingest_csv(input: impl Read, value_column: &str) -> Result<TimeSeries> {
    let text = read_text(input)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let header: Vec<&str> = headers.iter().collect();
    let value_idx = header.iter().position(|h| *h == value_column).ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("value column {value_column:?} not in header"),
    })?;
    let date_idx = header
        .iter()
        .position(|h| h.eq_ignore_ascii_case("date") || h.eq_ignore_ascii_case("datetime"))
        .or_else(|| (0..header.len()).find(|&i| i != value_idx))
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "no datetime column".into(),
        })?;

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Data {
                line,
                message: e.to_string(),
            }
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        records.push(RawRecord {
            line,
            stamp: row.get(date_idx).unwrap_or_default().to_string(),
            value: row.get(value_idx).unwrap_or_default().to_string(),
        });
    }
    assemble(records, value_column)
}

// ---------------------------------------------------------------------------
// Transformation and summaries
// ---------------------------------------------------------------------------

/// Pointwise natural logarithm of a raw (positive) series.
pub fn log_transform(series: &TimeSeries) -> Result<TimeSeries> {
    if series.scale == Scale::NaturalLog {
        return Err(Error::InvalidArgument("series is already log-transformed".into()));
    }
    if let Some(index) = series.values.iter().position(|&v| v <= 0.0) {
        return Err(Error::Domain {
            index,
            message: format!("log of nonpositive value {}", series.values[index]),
        });
    }
    Ok(TimeSeries {
        values: series.values.iter().map(|v| v.ln()).collect(),
        scale: Scale::NaturalLog,
        ..series.clone()
    })
}

/// Inverse of [`log_transform`].
pub fn exp_transform(series: &TimeSeries) -> Result<TimeSeries> {
    if series.scale != Scale::NaturalLog {
        return Err(Error::InvalidArgument("series is not log-transformed".into()));
    }
    Ok(TimeSeries {
        values: series.values.iter().map(|v| v.exp()).collect(),
        scale: Scale::Raw,
        ..series.clone()
    })
}

/// Sample quantile by linear interpolation between order statistics
/// (position `(n - 1) p` in the sorted sample). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let pos = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    /// Sample standard deviation (denominator `n - 1`).
    pub sd: f64,
    /// `m3 / m2^1.5` with biased central moments.
    pub skewness: f64,
    /// Non-excess kurtosis `m4 / m2^2`.
    pub kurtosis: f64,
}

pub fn describe_values(values: &[f64]) -> Result<DescriptiveStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "descriptive statistics need at least 2 values, got {n}"
        )));
    }
    let sorted = sorted_copy(values);
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let sd = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(DescriptiveStats {
        n,
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        mean,
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[n - 1],
        sd,
        skewness,
        kurtosis,
    })
}

pub fn describe(series: &TimeSeries) -> Result<DescriptiveStats> {
    describe_values(series.values())
}

/// Sample autocorrelation `r(0..=max_lag)`.
pub fn acf(series: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    acf_values(series.values(), max_lag)
}

pub fn acf_values(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if max_lag >= n {
        return Err(Error::InvalidArgument(format!(
            "max_lag {max_lag} must be below series length {n}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let denom: f64 = centred.iter().map(|d| d * d).sum();
    if denom == 0.0 {
        return Err(Error::Degenerate("constant series has zero variance".into()));
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                centred.iter().zip(&centred[k..]).map(|(a, b)| a * b).sum::<f64>() / denom
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    /// Ordinal of the curve within its sample.
    pub index: usize,
    /// Calendar date of the curve's first underlying observation.
    pub start: NaiveDate,
    pub points: Vec<f64>,
}

impl Curve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    Annual12,
    Monthly31,
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Construction::Annual12 => f.write_str("annual12"),
            Construction::Monthly31 => f.write_str("monthly31"),
        }
    }
}

/// Ordered, equal-length curves cut from one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    curves: Vec<Curve>,
    construction: Construction,
    source_start: NaiveDate,
    source_len: usize,
    /// Observations discarded because they formed a partial period.
    dropped: usize,
}

impl CurveSample {
    /// Wraps already-built curves; all must share one length.
    pub fn from_curves(curves: Vec<Curve>, construction: Construction) -> Result<Self> {
        let first = curves
            .first()
            .ok_or_else(|| Error::InsufficientData("curve sample is empty".into()))?;
        let len = first.len();
        if let Some(bad) = curves.iter().find(|c| c.len() != len) {
            return Err(Error::LengthMismatch {
                expected: len,
                found: bad.len(),
            });
        }
        let source_start = first.start;
        let source_len = curves.iter().map(Curve::len).sum();
        Ok(Self {
            curves,
            construction,
            source_start,
            source_len,
            dropped: 0,
        })
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn curve_len(&self) -> usize {
        self.curves.first().map_or(0, Curve::len)
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn source_start(&self) -> NaiveDate {
        self.source_start
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// The first `n` curves as a new sample.
    pub fn head(&self, n: usize) -> CurveSample {
        CurveSample {
            curves: self.curves[..n.min(self.curves.len())].to_vec(),
            ..self.clone()
        }
    }

    /// Concatenation of all curve points in order.
    pub fn flatten(&self) -> Vec<f64> {
        self.curves.iter().flat_map(|c| c.points.iter().copied()).collect()
    }
}

/// Cuts a monthly series into consecutive 12-point curves.
///
/// A trailing partial year is dropped (and logged), never padded.
pub fn to_annual_curves(series: &TimeSeries) -> Result<CurveSample> {
    if series.cadence != Cadence::Monthly {
        return Err(Error::InvalidArgument("annual curves need a monthly series".into()));
    }
    if series.len() < 24 {
        return Err(Error::InsufficientData(format!(
            "annual curves need at least 24 monthly observations, got {}",
            series.len()
        )));
    }
    let n = series.len() / 12;
    let dropped = series.len() - 12 * n;
    if dropped > 0 {
        log::warn!("dropping {dropped} trailing monthly observations (partial year)");
    }
    let curves = series.values[..12 * n]
        .chunks_exact(12)
        .enumerate()
        .map(|(i, chunk)| Curve {
            index: i,
            start: series.date_at(12 * i),
            points: chunk.to_vec(),
        })
        .collect();
    Ok(CurveSample {
        curves,
        construction: Construction::Annual12,
        source_start: series.start,
        source_len: series.len(),
        dropped,
    })
}

/// Linear resampling of `values` (length `m >= 1`) onto 31 points at
/// positions `1 + (m - 1)(j - 1) / 30`, `j = 1..=31`.
pub fn resample_to_31(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    assert!(m >= 1, "cannot resample an empty month");
    if m == 31 {
        return values.to_vec();
    }
    (0..31)
        .map(|j| {
            let pos = (m - 1) as f64 * j as f64 / 30.0;
            let lo = (pos.floor() as usize).min(m - 1);
            let hi = (lo + 1).min(m - 1);
            let frac = pos - lo as f64;
            if frac == 0.0 {
                values[lo]
            } else {
                values[lo] + frac * (values[hi] - values[lo])
            }
        })
        .collect()
}

fn days_in_month(d: NaiveDate) -> u32 {
    let first = d.with_day(1).expect("day 1 exists");
    ((first + Months::new(1)) - first).num_days() as u32
}

/// Cuts a daily series into one 31-point curve per whole calendar month.
///
/// Partial leading and trailing months are dropped (and logged).
pub fn to_monthly_curves(series: &TimeSeries) -> Result<CurveSample> {
    if series.cadence != Cadence::Daily {
        return Err(Error::InvalidArgument("monthly curves need a daily series".into()));
    }
    let mut curves = Vec::new();
    let mut dropped = 0;
    let mut i = 0;
    let n = series.len();
    while i < n {
        let date = series.date_at(i);
        let month_len = days_in_month(date) as usize;
        let remaining_in_month = month_len - (date.day() as usize - 1);
        let available = remaining_in_month.min(n - i);
        if date.day() != 1 || available < month_len {
            dropped += available;
            i += available;
            continue;
        }
        curves.push(Curve {
            index: curves.len(),
            start: date,
            points: resample_to_31(&series.values[i..i + month_len]),
        });
        i += month_len;
    }
    if dropped > 0 {
        log::warn!("dropping {dropped} daily observations from partial months");
    }
    if curves.is_empty() {
        return Err(Error::InsufficientData("no whole calendar month in series".into()));
    }
    Ok(CurveSample {
        curves,
        construction: Construction::Monthly31,
        source_start: series.start,
        source_len: series.len(),
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn monthly(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(values, ymd(1944, 1, 1), Cadence::Monthly, Scale::Raw).unwrap()
    }

    const RDB_HEADER: &str = "# US Geological Survey\n# retrieved: 2010-01-01\nagency_cd\tsite_no\tdatetime\tflow\n5s\t15s\t20d\t14n\n";

    #[test]
    fn rdb_single_record() {
        let text = format!("{RDB_HEADER}USGS\t09498500\t2009-01-01\t5.2\n");
        let s = ingest_nwis_rdb(text.as_bytes(), "flow").unwrap();
        assert_eq!(s.values(), &[5.2]);
        assert_eq!(s.start(), ymd(2009, 1, 1));
    }

    #[test]
    fn rdb_shuffled_equals_sorted() {
        let sorted = format!(
            "{RDB_HEADER}USGS\t1\t2009-01-01\t1.0\nUSGS\t1\t2009-01-02\t2.0\nUSGS\t1\t2009-01-03\t3.0\n"
        );
        let shuffled = format!(
            "{RDB_HEADER}USGS\t1\t2009-01-03\t3.0\nUSGS\t1\t2009-01-01\t1.0\nUSGS\t1\t2009-01-02\t2.0\n"
        );
        let a = ingest_nwis_rdb(sorted.as_bytes(), "flow").unwrap();
        let b = ingest_nwis_rdb(shuffled.as_bytes(), "flow").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cadence(), Cadence::Daily);
    }

    #[test]
    fn rdb_monthly_statistics_layout() {
        let mut text = String::from(
            "# monthly stats\nagency_cd\tsite_no\tparameter_cd\tts_id\tyear_nu\tmonth_nu\tmean_va\n5s\t15s\t5s\t10n\t4s\t2s\t12s\n",
        );
        for year in 1944..2010 {
            for month in 1..=12 {
                text.push_str(&format!("USGS\t09498500\t00060\t1\t{year}\t{month}\t{}.5\n", month));
            }
        }
        let s = ingest_nwis_rdb(text.as_bytes(), "mean_va").unwrap();
        assert_eq!(s.len(), 792);
        assert_eq!(s.cadence(), Cadence::Monthly);
        assert_eq!(s.stamp(791), "2009-12");
    }

    #[test]
    fn rdb_malformed_format_row() {
        let text = "# c\nagency_cd\tdatetime\tflow\nnot-a-format\t20d\t14n\nUSGS\t2009-01-01\t1\n";
        assert_eq!(
            ingest_nwis_rdb(text.as_bytes(), "flow"),
            Err(Error::Parse {
                line: 3,
                message: "malformed format row \"not-a-format\\t20d\\t14n\"".into()
            })
        );
    }

    #[test]
    fn rdb_non_numeric_value_names_line() {
        let text = format!("{RDB_HEADER}USGS\t1\t2009-01-01\t1.0\nUSGS\t1\t2009-01-02\tIce\n");
        match ingest_nwis_rdb(text.as_bytes(), "flow") {
            Err(Error::Data { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rdb_gap_lists_missing_stamps() {
        let text = format!("{RDB_HEADER}USGS\t1\t2009-01-01\t1.0\nUSGS\t1\t2009-01-04\t2.0\n");
        assert_eq!(
            ingest_nwis_rdb(text.as_bytes(), "flow"),
            Err(Error::Gap {
                missing: vec!["2009-01-02".into(), "2009-01-03".into()]
            })
        );
    }

    #[test]
    fn csv_single_record() {
        let s = ingest_csv("date,flow\n1944-01,2.11\n".as_bytes(), "flow").unwrap();
        assert_eq!(s.values(), &[2.11]);
        assert_eq!(s.cadence(), Cadence::Monthly);
    }

    #[test]
    fn csv_empty_body() {
        assert_eq!(ingest_csv("date,flow\n".as_bytes(), "flow"), Err(Error::NoRecords));
    }

    #[test]
    fn csv_duplicate_stamp() {
        let text = "date,flow\n1944-01,2.11\n1944-02,3.0\n1944-01,2.5\n";
        assert_eq!(
            ingest_csv(text.as_bytes(), "flow"),
            Err(Error::DuplicateStamp("1944-01".into()))
        );
    }

    #[test]
    fn csv_monthly_gap() {
        let text = "date,flow\n1944-01,1\n1944-04,2\n";
        assert_eq!(
            ingest_csv(text.as_bytes(), "flow"),
            Err(Error::Gap {
                missing: vec!["1944-02".into(), "1944-03".into()]
            })
        );
    }

    #[test]
    fn csv_first_of_month_dates_are_monthly() {
        let text = "date,flow\n2000-01-01,1\n2000-02-01,2\n2000-03-01,3\n";
        let s = ingest_csv(text.as_bytes(), "flow").unwrap();
        assert_eq!(s.cadence(), Cadence::Monthly);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn log_transform_values() {
        let e = std::f64::consts::E;
        let s = monthly(vec![1.0, e, e * e]);
        let l = log_transform(&s).unwrap();
        assert_eq!(l.scale(), Scale::NaturalLog);
        for (got, want) in l.values().iter().zip([0.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        let back = exp_transform(&l).unwrap();
        for (a, b) in back.values().iter().zip(s.values()) {
            assert!(((a - b) / b).abs() < 1e-12);
        }
    }

    #[test]
    fn log_transform_rejects_zero() {
        let s = monthly(vec![1.0, 0.0, 2.0]);
        assert!(matches!(log_transform(&s), Err(Error::Domain { index: 1, .. })));
    }

    #[test]
    fn describe_small_sample() {
        let d = describe_values(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(d.median, 3.0);
        assert_eq!(d.mean, 3.0);
        assert_eq!(d.q1, 2.0);
        assert_eq!(d.q3, 4.0);
        assert!((d.sd - 2.5f64.sqrt()).abs() < 1e-15);
        let sym = describe_values(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(sym.skewness, 0.0);
        // m2 = 2/3, m4 = 2/3 -> kurtosis 1.5
        assert!((sym.kurtosis - 1.5).abs() < 1e-14);
        assert!(describe_values(&[1.0]).is_err());
    }

    #[test]
    fn quantile_convention() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((quantile_sorted(&v, 0.5) - 50.5).abs() < 1e-12);
        assert!((quantile_sorted(&v, 0.95) - 95.05).abs() < 1e-12);
    }

    #[test]
    fn acf_basic() {
        let alt: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = acf_values(&alt, 3).unwrap();
        assert_eq!(r[0], 1.0);
        // Direct evaluation: r(1) = -(n-1)/n for a zero-mean alternating series.
        assert!((r[1] + 0.99).abs() < 1e-12);
        assert!((r[1] + 1.0).abs() < 0.05);
        assert!(acf_values(&[2.0; 10], 2).is_err());
        assert!(acf_values(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn annual_curves_chunk_in_order() {
        let s = monthly((1..=24).map(f64::from).collect());
        let c = to_annual_curves(&s).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.curves()[0].points, (1..=12).map(f64::from).collect::<Vec<_>>());
        assert_eq!(c.curves()[1].points, (13..=24).map(f64::from).collect::<Vec<_>>());
        assert_eq!(c.flatten(), s.values());
        assert_eq!(c.curves()[1].start, ymd(1945, 1, 1));
    }

    #[test]
    fn annual_curves_salt_length() {
        let s = monthly(vec![1.0; 792]);
        assert_eq!(to_annual_curves(&s).unwrap().len(), 66);
    }

    #[test]
    fn annual_curves_drop_partial_year() {
        let s = monthly((0..30).map(f64::from).collect());
        let c = to_annual_curves(&s).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.dropped(), 6);
        assert!(to_annual_curves(&monthly(vec![1.0; 23])).is_err());
    }

    #[test]
    fn resample_identity_and_thirty_day_month() {
        let full: Vec<f64> = (1..=31).map(f64::from).collect();
        assert_eq!(resample_to_31(&full), full);
        let thirty: Vec<f64> = (1..=30).map(f64::from).collect();
        let r = resample_to_31(&thirty);
        assert_eq!(r.len(), 31);
        assert_eq!(r[0], 1.0);
        assert_eq!(r[30], 30.0);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
        // value at grid point j is 1 + 29 (j-1)/30 for a linear month
        for (j, v) in r.iter().enumerate() {
            assert!((v - (1.0 + 29.0 * j as f64 / 30.0)).abs() < 1e-12);
        }
        assert_eq!(resample_to_31(&[4.0; 28]), vec![4.0; 31]);
    }

    #[test]
    fn monthly_curves_whole_months_only() {
        // 2009-01-15 .. 2009-03-31: partial January is dropped.
        let start = ymd(2009, 1, 15);
        let days = 17 + 28 + 31;
        let s = TimeSeries::new((0..days).map(f64::from).collect(), start, Cadence::Daily, Scale::Raw)
            .unwrap();
        let c = to_monthly_curves(&s).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.dropped(), 17);
        assert_eq!(c.curves()[0].start, ymd(2009, 2, 1));
        assert_eq!(c.curves()[0].points[0], 17.0);
        assert_eq!(c.curves()[0].points[30], 44.0);
        assert_eq!(c.curves()[1].points, (45..76).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn slice_by_dates() {
        let s = TimeSeries::new((0..730).map(f64::from).collect(), ymd(2007, 1, 1), Cadence::Daily, Scale::Raw)
            .unwrap();
        let y2008 = s.slice_dates(ymd(2008, 1, 1), ymd(2009, 1, 1)).unwrap();
        assert_eq!(y2008.len(), 365);
        assert_eq!(y2008.values()[0], 365.0);
        assert!(s.slice_dates(ymd(2010, 1, 1), ymd(2011, 1, 1)).is_none());
    }
}

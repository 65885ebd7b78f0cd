//! Seeded synthetic series for self-tests and fixtures.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Cadence, Scale, TimeSeries};
use crate::error::Result;
use crate::evt::GevParams;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seasonal log-flow pattern used by [`periodic_monthly`].
pub fn seasonal_log_flow(month: usize) -> f64 {
    let t = std::f64::consts::TAU * month as f64 / 12.0;
    2.5 + 1.2 * t.sin() + 0.4 * (2.0 * t).cos()
}

/// Monthly flows whose logarithm repeats every 12 months plus Gaussian
/// noise of standard deviation `noise_sd`.
pub fn periodic_monthly(start_year: i32, years: usize, noise_sd: f64, seed: u64) -> Result<TimeSeries> {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, noise_sd.max(0.0)).expect("valid normal");
    let values = (0..12 * years)
        .map(|t| (seasonal_log_flow(t % 12) + noise.sample(&mut r)).exp())
        .collect();
    let start = NaiveDate::from_ymd_opt(start_year, 1, 1).expect("valid year");
    TimeSeries::new(values, start, Cadence::Monthly, Scale::Raw)
}

/// Inverse-CDF draws from a GEV distribution.
pub fn gev_sample(params: &GevParams, n: usize, r: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = r.random_range(f64::EPSILON..1.0);
            params.quantile(u).expect("u in (0, 1)")
        })
        .collect()
}

/// Daily series covering whole calendar years `first_year..=last_year`,
/// one draw of `sample` per day.
pub fn daily_from(first_year: i32, last_year: i32, mut sample: impl FnMut() -> f64) -> Result<TimeSeries> {
    let start = NaiveDate::from_ymd_opt(first_year, 1, 1).expect("valid year");
    let end = NaiveDate::from_ymd_opt(last_year + 1, 1, 1).expect("valid year");
    let days = (end - start).num_days() as usize;
    let values = (0..days).map(|_| sample()).collect();
    TimeSeries::new(values, start, Cadence::Daily, Scale::Raw)
}

/// Daily i.i.d. Pareto(shape 3, scale 10) flows.
pub fn heavy_tailed_daily(first_year: i32, last_year: i32, seed: u64) -> Result<TimeSeries> {
    let mut r = rng(seed);
    daily_from(first_year, last_year, || {
        let u: f64 = r.random_range(f64::EPSILON..1.0);
        10.0 * u.powf(-1.0 / 3.0)
    })
}

/// Daily i.i.d. Gumbel(30, 5) flows.
pub fn gumbel_daily(first_year: i32, last_year: i32, seed: u64) -> Result<TimeSeries> {
    let params = GevParams::new(30.0, 5.0, 0.0)?;
    let mut r = rng(seed);
    daily_from(first_year, last_year, || gev_sample(&params, 1, &mut r)[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_seeded() {
        let a = periodic_monthly(1950, 5, 0.05, 1).unwrap();
        let b = periodic_monthly(1950, 5, 0.05, 1).unwrap();
        let c = periodic_monthly(1950, 5, 0.05, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 60);
        let d = heavy_tailed_daily(2000, 2001, 3).unwrap();
        assert_eq!(d.len(), 366 + 365);
        assert!(d.values().iter().all(|v| *v >= 10.0));
    }
}

//! Generalised extreme value (GEV) distribution, maximum-likelihood fitting,
//! flow quantiles and empirical return periods.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::data::{quantile_sorted, sorted_copy};
use crate::error::{Error, Result};
use crate::numeric::{nelder_mead, NelderMeadOptions};

/// Below this `|γ|` the Gumbel (γ = 0) formulas are used.
pub const GUMBEL_THRESHOLD: f64 = 1e-8;
pub const MLE_TOLERANCE: f64 = 1e-10;
pub const MLE_MAX_ITERATIONS: usize = 5000;
const INFEASIBLE: f64 = 1e300;

/// Location, scale and shape of a GEV distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, gamma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "invalid GEV parameters (mu={mu}, sigma={sigma}, gamma={gamma})"
            )));
        }
        Ok(Self { mu, sigma, gamma })
    }

    fn is_gumbel(&self) -> bool {
        self.gamma.abs() < GUMBEL_THRESHOLD
    }

    /// Support indicator term `1 + γ (x - μ) / σ`.
    fn support_term(&self, x: f64) -> f64 {
        1.0 + self.gamma * (x - self.mu) / self.sigma
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        if self.is_gumbel() {
            return (-(-z).exp()).exp();
        }
        let t = self.support_term(x);
        if t <= 0.0 {
            return if self.gamma > 0.0 { 0.0 } else { 1.0 };
        }
        // t^{-1/γ} = exp(-log1p(γ z) / γ)
        (-(-(self.gamma * z).ln_1p() / self.gamma).exp()).exp()
    }

    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::InvalidArgument(format!("probability must be in (0, 1), got {prob}")));
        }
        let y = -prob.ln();
        Ok(if self.is_gumbel() {
            self.mu - self.sigma * y.ln()
        } else {
            self.mu + self.sigma * (y.powf(-self.gamma) - 1.0) / self.gamma
        })
    }

    /// Log-density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        if self.is_gumbel() {
            return -self.sigma.ln() - z - (-z).exp();
        }
        let t = self.support_term(x);
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let ln_t = (self.gamma * z).ln_1p();
        -self.sigma.ln() - (1.0 + 1.0 / self.gamma) * ln_t - (-ln_t / self.gamma).exp()
    }
}

pub fn gev_cdf(p: &GevParams, x: f64) -> f64 {
    p.cdf(x)
}

pub fn gev_quantile(p: &GevParams, prob: f64) -> Result<f64> {
    p.quantile(prob)
}

/// Negative log-likelihood; `+inf` when any observation is outside the
/// support or `σ <= 0`.
pub fn neg_log_likelihood(sample: &[f64], mu: f64, sigma: f64, gamma: f64) -> f64 {
    if !(sigma > 0.0) || !mu.is_finite() || !gamma.is_finite() {
        return f64::INFINITY;
    }
    let p = GevParams { mu, sigma, gamma };
    let mut total = 0.0;
    for &x in sample {
        let l = p.ln_pdf(x);
        if !l.is_finite() {
            return f64::INFINITY;
        }
        total -= l;
    }
    total
}

/// Probability-weighted-moment estimates (Hosking, Wallis and Wood).
pub fn pwm_estimate(sample: &[f64]) -> Result<GevParams> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::InsufficientData("PWM estimation needs at least 3 values".into()));
    }
    let x = sorted_copy(sample);
    let nf = n as f64;
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for (j, v) in x.iter().enumerate() {
        let j = j as f64;
        b0 += v;
        b1 += v * j / (nf - 1.0);
        b2 += v * j * (j - 1.0) / ((nf - 1.0) * (nf - 2.0));
    }
    b0 /= nf;
    b1 /= nf;
    b2 /= nf;
    let denom = 3.0 * b2 - b0;
    if denom == 0.0 || 2.0 * b1 - b0 == 0.0 {
        return Err(Error::Degenerate("PWM moments are degenerate".into()));
    }
    let c = (2.0 * b1 - b0) / denom - 2f64.ln() / 3f64.ln();
    // Hosking's shape k is the negative of γ.
    let k = 7.8590 * c + 2.9554 * c * c;
    let (sigma, mu) = if k.abs() < 1e-6 {
        let sigma = (2.0 * b1 - b0) / 2f64.ln();
        (sigma, b0 - 0.577_215_664_901_532_9 * sigma)
    } else {
        let g1 = gamma(1.0 + k);
        let sigma = (2.0 * b1 - b0) * k / (g1 * (1.0 - 2f64.powf(-k)));
        (sigma, b0 + sigma * (g1 - 1.0) / k)
    };
    GevParams::new(mu, sigma, -k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevFit {
    pub params: GevParams,
    pub neg_log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub sample_size: usize,
    /// Starting point of the optimiser.
    pub initial: GevParams,
}

fn feasible_start(sample: &[f64], start: GevParams) -> GevParams {
    if neg_log_likelihood(sample, start.mu, start.sigma, start.gamma).is_finite() {
        return start;
    }
    // Widen the scale until every observation is inside the support, then
    // fall back to the Gumbel moment estimate.
    for factor in [1.5, 2.0, 4.0, 8.0] {
        let s = start.sigma * factor;
        if neg_log_likelihood(sample, start.mu, s, start.gamma).is_finite() {
            return GevParams { sigma: s, ..start };
        }
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let sd = (sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sigma = sd * 6f64.sqrt() / std::f64::consts::PI;
    GevParams {
        mu: mean - 0.577_215_664_901_532_9 * sigma,
        sigma,
        gamma: 0.0,
    }
}

/// Maximum-likelihood GEV fit by Nelder–Mead over `(μ, σ, γ)`, started from
/// the PWM estimate. Infeasible proposals get a large penalty.
pub fn gev_fit_mle(sample: &[f64]) -> Result<GevFit> {
    gev_fit_mle_limited(sample, MLE_MAX_ITERATIONS)
}

/// [`gev_fit_mle`] with an explicit iteration budget.
pub fn gev_fit_mle_limited(sample: &[f64], max_iterations: usize) -> Result<GevFit> {
    if sample.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "GEV fit needs at least 10 values, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("sample contains non-finite values".into()));
    }
    let first = sample[0];
    if sample.iter().all(|&x| x == first) {
        return Err(Error::Degenerate("constant sample".into()));
    }
    let initial = feasible_start(sample, pwm_estimate(sample)?);
    let objective = |p: &[f64]| {
        let v = neg_log_likelihood(sample, p[0], p[1], p[2]);
        if v.is_finite() {
            v
        } else {
            INFEASIBLE
        }
    };
    let mut opts = NelderMeadOptions {
        tolerance: MLE_TOLERANCE,
        max_iterations,
        steps: vec![0.1 * initial.sigma, 0.1 * initial.sigma, 0.1],
    };
    let mut result = nelder_mead(objective, &[initial.mu, initial.sigma, initial.gamma], &opts);
    let mut iterations = result.iterations;
    // One restart from the optimum guards against a collapsed simplex.
    if result.converged && iterations < max_iterations {
        let sigma = result.point[1];
        opts.max_iterations = max_iterations - iterations;
        opts.steps = vec![0.05 * sigma, 0.05 * sigma, 0.02];
        let again = nelder_mead(objective, &result.point, &opts);
        iterations += again.iterations;
        if again.value <= result.value {
            result = again;
        } else {
            result.converged = again.converged;
        }
    }
    let params = GevParams::new(result.point[0], result.point[1], result.point[2])?;
    let nll = neg_log_likelihood(sample, params.mu, params.sigma, params.gamma);
    if !nll.is_finite() {
        return Err(Error::NoConvergence("GEV optimiser ended at an infeasible point".into()));
    }
    Ok(GevFit {
        params,
        neg_log_likelihood: nll,
        converged: result.converged,
        iterations,
        sample_size: sample.len(),
        initial,
    })
}

/// Empirical return period `1 / (1 - F_n(c))` of level `c` within one
/// year of values, with `F_n(c)` the share of values `<= c`. Equals
/// `len / #{values > c}`; `f64::INFINITY` when nothing exceeds `c`.
pub fn empirical_return_period(year_values: &[f64], c: f64) -> f64 {
    let exceed = year_values.iter().filter(|&&v| v > c).count();
    if exceed == 0 {
        f64::INFINITY
    } else {
        year_values.len() as f64 / exceed as f64
    }
}

pub const LEVEL_COUNT: usize = 20;
pub const UPPER_LEVEL_PROB: f64 = 0.95;

/// Equally spaced levels from the sample median to its 0.95-quantile.
pub fn levels_grid(sample: &[f64]) -> Result<Vec<f64>> {
    levels_grid_n(sample, LEVEL_COUNT)
}

/// As [`levels_grid`] with `count` levels; `count == 1` yields the median only.
pub fn levels_grid_n(sample: &[f64], count: usize) -> Result<Vec<f64>> {
    if sample.is_empty() || count == 0 {
        return Err(Error::InsufficientData("levels need a non-empty sample".into()));
    }
    let sorted = sorted_copy(sample);
    let lo = quantile_sorted(&sorted, 0.5);
    if count == 1 {
        return Ok(vec![lo]);
    }
    let hi = quantile_sorted(&sorted, UPPER_LEVEL_PROB);
    if !(hi > lo) {
        return Err(Error::Degenerate(format!(
            "median {lo} equals the {UPPER_LEVEL_PROB}-quantile"
        )));
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i == count - 1 { hi } else { lo + step * i as f64 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1, Gumbel};

    /// GEV draws through the exponential representation
    /// `X = μ + σ (E^{-γ} - 1) / γ`, `E ~ Exp(1)`.
    fn simulate(seed: u64, n: usize, mu: f64, sigma: f64, gamma: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if gamma == 0.0 {
            let d = Gumbel::new(mu, sigma).unwrap();
            return (0..n).map(|_| d.sample(&mut rng)).collect();
        }
        (0..n)
            .map(|_| {
                let e: f64 = Exp1.sample(&mut rng);
                mu + sigma * (e.powf(-gamma) - 1.0) / gamma
            })
            .collect()
    }

    #[test]
    fn cdf_examples() {
        let gumbel = GevParams::new(3.0, 2.0, 0.0).unwrap();
        assert!((gumbel.cdf(3.0) - (-1.0f64).exp()).abs() < 1e-15);
        let frechet = GevParams::new(0.0, 1.0, 0.5).unwrap();
        assert_eq!(frechet.cdf(-2.0), 0.0);
        assert_eq!(frechet.cdf(-5.0), 0.0);
        let g1 = GevParams::new(0.0, 1.0, 1.0).unwrap();
        assert!((g1.cdf(1.0) - (-0.5f64).exp()).abs() < 1e-15);
        let weibull = GevParams::new(0.0, 1.0, -0.5).unwrap();
        assert_eq!(weibull.cdf(2.0), 1.0);
        assert_eq!(weibull.cdf(3.0), 1.0);
    }

    #[test]
    fn quantile_examples() {
        let gumbel = GevParams::new(3.0, 2.0, 0.0).unwrap();
        assert!((gumbel.quantile((-1.0f64).exp()).unwrap() - 3.0).abs() < 1e-14);
        let g1 = GevParams::new(0.0, 1.0, 1.0).unwrap();
        assert!((g1.quantile((-0.5f64).exp()).unwrap() - 1.0).abs() < 1e-14);
        assert!(g1.quantile(0.0).is_err());
        assert!(g1.quantile(1.0).is_err());
    }

    #[test]
    fn quantile_round_trip_random_params() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let p = GevParams::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(0.2..4.0),
                rng.random_range(-0.5..0.5),
            )
            .unwrap();
            for prob in [0.1, 0.5, 0.9, 0.99] {
                let x = p.quantile(prob).unwrap();
                assert!((p.cdf(x) - prob).abs() < 1e-10, "{p:?} {prob}");
            }
        }
    }

    #[test]
    fn gumbel_branch_continuity() {
        let base = GevParams::new(1.0, 2.0, 0.0).unwrap();
        for gamma in [1e-9, -1e-9, 1e-7, -1e-7] {
            let near = GevParams { gamma, ..base };
            for i in 0..200 {
                let x = -5.0 + i as f64 * 0.1;
                assert!((near.cdf(x) - base.cdf(x)).abs() < 1e-6, "gamma={gamma} x={x}");
            }
        }
    }

    #[test]
    fn ln_pdf_integrates_to_cdf() {
        let p = GevParams::new(0.5, 1.3, 0.2).unwrap();
        let (a, b) = (p.quantile(1e-6).unwrap(), 3.0);
        let n = 20_000;
        let step = (b - a) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = a + (i as f64 + 0.5) * step;
            acc += p.ln_pdf(x).exp() * step;
        }
        assert!((acc - (p.cdf(b) - p.cdf(a))).abs() < 1e-6);
    }

    #[test]
    fn mle_recovers_gumbel() {
        let sample = simulate(42, 5000, 10.0, 2.0, 0.0);
        let fit = gev_fit_mle(&sample).unwrap();
        assert!(fit.converged);
        assert!((fit.params.mu - 10.0).abs() < 0.15, "{:?}", fit.params);
        assert!((fit.params.sigma - 2.0).abs() < 0.15, "{:?}", fit.params);
        assert!(fit.params.gamma.abs() < 0.1, "{:?}", fit.params);
        let init_nll = neg_log_likelihood(&sample, fit.initial.mu, fit.initial.sigma, fit.initial.gamma);
        assert!(fit.neg_log_likelihood <= init_nll);
    }

    #[test]
    fn mle_recovers_heavy_tail() {
        let sample = simulate(7, 5000, 10.0, 2.0, 0.3);
        let fit = gev_fit_mle(&sample).unwrap();
        assert!((fit.params.gamma - 0.3).abs() < 0.1, "{:?}", fit.params);
    }

    #[test]
    fn mle_location_shift() {
        let sample = simulate(3, 2000, 5.0, 1.5, 0.1);
        let shifted: Vec<f64> = sample.iter().map(|x| x + 100.0).collect();
        let a = gev_fit_mle(&sample).unwrap();
        let b = gev_fit_mle(&shifted).unwrap();
        assert!((b.params.mu - a.params.mu - 100.0).abs() < 1e-4, "{a:?} {b:?}");
        assert!((b.params.sigma - a.params.sigma).abs() < 1e-4);
        assert!((b.params.gamma - a.params.gamma).abs() < 1e-4);
    }

    #[test]
    fn mle_errors() {
        assert!(matches!(gev_fit_mle(&[1.0; 5]), Err(Error::InsufficientData(_))));
        assert!(matches!(gev_fit_mle(&[1.0; 20]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn empirical_return_period_counts() {
        let year: Vec<f64> = (1..=365).map(f64::from).collect();
        assert_eq!(empirical_return_period(&year, 0.0), 1.0);
        // 73 values above 292
        assert_eq!(empirical_return_period(&year, 292.0), 5.0);
        assert!((empirical_return_period(&year, 292.0) - 1.0 / (1.0 - 292.0 / 365.0)).abs() < 1e-12);
        assert_eq!(empirical_return_period(&year, 365.0), f64::INFINITY);
        assert_eq!(empirical_return_period(&year, 364.5), 365.0);
        let leap: Vec<f64> = (1..=366).map(f64::from).collect();
        assert_eq!(empirical_return_period(&leap, 365.5), 366.0);
        let mut prev = 0.0;
        for c in 0..400 {
            let rt = empirical_return_period(&year, c as f64);
            assert!(rt >= prev);
            prev = rt;
        }
    }

    #[test]
    fn levels_examples() {
        let sample: Vec<f64> = (1..=100).map(f64::from).collect();
        let levels = levels_grid(&sample).unwrap();
        assert_eq!(levels.len(), 20);
        assert!((levels[0] - 50.5).abs() < 1e-12);
        assert!((levels[19] - 95.05).abs() < 1e-12);
        assert!(levels.windows(2).all(|w| w[1] > w[0]));
        assert!(((levels[9] - levels[8]) - (levels[1] - levels[0])).abs() < 1e-12);
        assert!(levels_grid(&[3.0; 40]).is_err());
        assert_eq!(levels_grid_n(&sample, 1).unwrap(), vec![50.5]);
    }
}

//! Oracle suites run by `nfda selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nfda_core::evt::{gev_fit_mle, neg_log_likelihood, GevParams};
use nfda_core::fda::{FunctionalCdfModel, SemiMetric};
use nfda_core::kernels::{asymmetric_epanechnikov, epanechnikov, integrated_epanechnikov};
use nfda_core::synthetic::gev_sample;

use crate::args::SelftestArgs;
use crate::CliError;

pub const SUITES: [&str; 3] = ["nadaraya-watson", "gev-recovery", "kernel-normalization"];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn nw_brute_force(x: &[f64], y: &[f64], x0: f64, h: f64, g: f64, t: f64) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let u = (x0 - xi).abs() / h;
        let k = if u < 1.0 { 1.5 * (1.0 - u * u) } else { 0.0 };
        let v = (t - yi) / g;
        let hv = if v <= -1.0 {
            0.0
        } else if v >= 1.0 {
            1.0
        } else {
            0.5 + 0.75 * v - 0.25 * v * v * v
        };
        num += k * hv;
        den += k;
    }
    (den > 0.0).then(|| num / den)
}

/// Curve-length-1 conditional CDF against the scalar Nadaraya–Watson formula.
pub fn nadaraya_watson(seed: u64, fault: bool) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    let mut mismatch = None;
    for instance in 0..100 {
        let n = rng.random_range(1..=10);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let x0 = rng.random_range(-1.0..1.0);
        let h = rng.random_range(0.3..2.5);
        let g = rng.random_range(0.1..2.0);
        let preds: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        let model = FunctionalCdfModel::new(&preds, &y, SemiMetric::L2, h, g).expect("valid model");
        for k in 0..20 {
            let t = -7.0 + 14.0 * k as f64 / 19.0;
            let mut oracle = nw_brute_force(&x, &y, x0, h, g, t);
            if fault {
                oracle = oracle.map(|v| v + 1e-9);
            }
            match (model.conditional_cdf(&[x0], t), oracle) {
                (Ok(a), Some(b)) => {
                    worst = worst.max((a - b).abs());
                    compared += 1;
                }
                (Err(_), None) => {}
                _ => {
                    mismatch.get_or_insert(instance);
                }
            }
        }
    }
    let passed = mismatch.is_none() && worst < 1e-12;
    let detail = match mismatch {
        Some(i) => format!("neighbourhood disagreement on instance {i}"),
        None => format!("{compared} evaluations, max |diff| = {worst:.2e}"),
    };
    SuiteOutcome {
        name: "nadaraya-watson",
        passed,
        detail,
    }
}

/// Maximum-likelihood recovery of simulated GEV parameters.
pub fn gev_recovery(seed: u64, fault: bool) -> SuiteOutcome {
    let mut failures = Vec::new();
    let mut runs = 0;
    for (k, gamma) in [-0.2, 0.0, 0.3].into_iter().enumerate() {
        let truth = GevParams::new(10.0, 2.0, gamma).expect("valid params");
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let sample = gev_sample(&truth, 5000, &mut rng);
        let fit = match gev_fit_mle(&sample) {
            Ok(f) => f,
            Err(e) => {
                failures.push(format!("gamma {gamma}: {e}"));
                continue;
            }
        };
        runs += 1;
        let mu_ref = if fault { truth.mu + 1.0 } else { truth.mu };
        let p = fit.params;
        let init = neg_log_likelihood(&sample, fit.initial.mu, fit.initial.sigma, fit.initial.gamma);
        if (p.mu - mu_ref).abs() > 0.15 || (p.sigma - truth.sigma).abs() > 0.15 || (p.gamma - gamma).abs() > 0.1 {
            failures.push(format!(
                "gamma {gamma}: fitted ({:.3}, {:.3}, {:.3})",
                p.mu, p.sigma, p.gamma
            ));
        }
        if !fit.converged || fit.neg_log_likelihood > init {
            failures.push(format!("gamma {gamma}: optimiser contract violated"));
        }
    }
    SuiteOutcome {
        name: "gev-recovery",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{runs} fits of n = 5000 within (0.15, 0.15, 0.1)")
        } else {
            failures.join("; ")
        },
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Kernel integrals and the derivative relation between H and G.
pub fn kernel_normalization(fault: bool) -> SuiteOutcome {
    let upper = if fault { 0.9 } else { 1.0 };
    let ig = simpson(epanechnikov, -1.0, upper, 2000);
    let ik = simpson(asymmetric_epanechnikov, 0.0, 1.0, 2000);
    let step = 1e-5;
    let worst_deriv = (1..200)
        .map(|i| -0.995 + 1.99 * i as f64 / 200.0)
        .map(|u| {
            let d = (integrated_epanechnikov(u + step) - integrated_epanechnikov(u - step)) / (2.0 * step);
            (d - epanechnikov(u)).abs()
        })
        .fold(0.0f64, f64::max);
    let passed = (ig - 1.0).abs() < 1e-9 && (ik - 1.0).abs() < 1e-9 && worst_deriv < 1e-6;
    SuiteOutcome {
        name: "kernel-normalization",
        passed,
        detail: format!(
            "|∫G - 1| = {:.1e}, |∫K - 1| = {:.1e}, max |H' - G| = {:.1e}",
            (ig - 1.0).abs(),
            (ik - 1.0).abs(),
            worst_deriv
        ),
    }
}

pub fn run_suites(seed: u64, fault: Option<&str>) -> Vec<SuiteOutcome> {
    let hit = |name: &str| fault == Some(name);
    vec![
        nadaraya_watson(seed, hit("nadaraya-watson")),
        gev_recovery(seed, hit("gev-recovery")),
        kernel_normalization(hit("kernel-normalization")),
    ]
}

pub fn run(args: &SelftestArgs) -> Result<(), CliError> {
    if let Some(name) = args.inject_fault.as_deref() {
        if !SUITES.contains(&name) {
            return Err(CliError::precondition(format!(
                "unknown suite {name:?} (expected one of {})",
                SUITES.join(", ")
            )));
        }
    }
    let outcomes = run_suites(args.seed, args.inject_fault.as_deref());
    for o in &outcomes {
        println!("{} {:<22} {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(CliError::numerical(format!("{failed} self-test suite(s) failed")));
    }
    Ok(())
}

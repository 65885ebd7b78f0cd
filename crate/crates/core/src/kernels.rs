//! Epanechnikov-family kernels shared by every estimator.
//!
//! `G` is the symmetric density on `[-1, 1]`, `K` its asymmetric
//! restriction to `[0, 1]` (used for curve-space distances, which are
//! nonnegative), and `H` the distribution function of `G`.

use serde::{Deserialize, Serialize};

/// Symmetric Epanechnikov density `0.75 (1 - u^2)` on `[-1, 1]`.
#[inline]
pub fn epanechnikov(u: f64) -> f64 {
    if (-1.0..=1.0).contains(&u) {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Asymmetric Epanechnikov density `1.5 (1 - u^2)` on `[0, 1]`.
#[inline]
pub fn asymmetric_epanechnikov(u: f64) -> f64 {
    if (0.0..=1.0).contains(&u) {
        1.5 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Integrated Epanechnikov kernel, closed form `0.5 + 0.75u - 0.25u^3`.
#[inline]
pub fn integrated_epanechnikov(u: f64) -> f64 {
    if u <= -1.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        0.5 + 0.75 * u - 0.25 * u * u * u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelSpec {
    EpanechnikovSymmetric,
    EpanechnikovAsymmetric,
    Integrated,
}

impl KernelSpec {
    pub fn eval(self, u: f64) -> f64 {
        match self {
            KernelSpec::EpanechnikovSymmetric => epanechnikov(u),
            KernelSpec::EpanechnikovAsymmetric => asymmetric_epanechnikov(u),
            KernelSpec::Integrated => integrated_epanechnikov(u),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelSpec::EpanechnikovSymmetric => "epanechnikov",
            KernelSpec::EpanechnikovAsymmetric => "epanechnikov-asymmetric",
            KernelSpec::Integrated => "epanechnikov-integrated",
        }
    }
}

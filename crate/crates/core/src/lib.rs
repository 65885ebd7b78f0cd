//! Nonparametric functional data analysis (NFDA) for river-flow series.
//!
//! The crate covers two pipelines:
//!
//! - monthly mean-flow prediction, where each year of monthly values is one
//!   functional predictor and next year's months are estimated by the kernel
//!   conditional median or by functional kernel regression;
//! - flood-quantile estimation, where the functional conditional quantile
//!   built on 31-point monthly curves of daily maxima is compared against a
//!   maximum-likelihood GEV fit and a scalar kernel distribution estimator.
//!
//! Modules are layered bottom-up: [`kernels`] feeds [`smooth`] and [`fda`];
//! [`data`] builds series and curve samples; [`evt`] holds the parametric
//! machinery; [`eval`] wires everything into reproducible experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod eval;
pub mod evt;
pub mod fda;
pub mod kernels;
pub mod linalg;
pub mod numeric;
pub mod serde_float;
pub mod smooth;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};

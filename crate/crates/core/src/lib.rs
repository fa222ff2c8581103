//! Accuracy metrics in the distribution paradigm.
//!
//! Observed ratings are treated as draws from per-pair Gaussians
//! `R_ν ~ N(μ_ν, σ_ν)`, which turns RMSE, MAE and MSD into random variables.
//! This crate provides
//!
//! - special functions, distributions and quantiles ([`special`], [`dist`]),
//! - reproducible counter-based random streams ([`rng`]),
//! - the closed-form Nakagami model of the i.i.d. RMSE ([`analytic`]),
//! - Monte-Carlo propagation, histogram densities and error probabilities
//!   ([`metric`], [`density`], [`compare`]),
//! - the significant RMSE ([`significance`]),
//! - confidence intervals and borderline scenarios ([`uncertainty`]),
//! - noise-injection studies against a theoretical optimum ([`noisy`]),
//! - rating tensors, synthetic data and validation tests ([`tensor`],
//!   [`synth`], [`validate`]),
//! - leaderboard equivalence analysis ([`leaderboard`]).
//!
//! The crate is `no_std` and needs only `alloc`. Parallel execution is
//! injected through the [`exec::Executor`] trait; every trial owns its own
//! random stream, so results do not depend on how trials are partitioned.
//!
//! ```
//! use hue_core::analytic::AnalyticRmseModel;
//!
//! let model = AnalyticRmseModel::new(1).unwrap();
//! assert!((model.mean() - (2.0 / core::f64::consts::PI).sqrt()).abs() < 1e-12);
//! ```
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analytic;
pub mod compare;
pub mod density;
pub mod dist;
mod error;
pub mod exec;
pub mod leaderboard;
pub mod metric;
pub mod noisy;
pub mod rng;
pub mod significance;
pub mod special;
pub mod synth;
pub mod tensor;
pub mod uncertainty;
pub mod validate;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use rng::RandomSeed;

//! Closed-form RMSE distribution for i.i.d. unit-variance ratings.
//!
//! With `Z_ν = π_ν − R_ν ~ N(0, 1)`:
//! `S¹ = Σ Z_ν² ~ χ²(n)`, `S² = S¹/n ~ Γ(n/2, 2/n)` and
//! `RMSE = √S² ~ Nakagami(n/2, 1)`.

use alloc::vec::Vec;

use crate::dist::{nakagami_mean_var, ChiSquared, GammaDist, NakagamiParams};
use crate::exec::Executor;
use crate::metric::{sample_metric, MetricKind, RatingDistributionSet};
use crate::density::ks_distance_to;
use crate::rng::RandomSeed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticRmseModel {
    pub n: u64,
    pub params: NakagamiParams,
}

impl AnalyticRmseModel {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "need at least one pair"));
        }
        Ok(Self { n, params: NakagamiParams::new(n as f64 / 2.0, 1.0)? })
    }

    /// Distribution of the sum of squared deviations.
    pub fn sum_of_squares(&self) -> ChiSquared {
        ChiSquared { dof: self.n as f64 }
    }

    /// Distribution of the mean squared deviation.
    pub fn mean_square(&self) -> GammaDist {
        GammaDist { shape: self.n as f64 / 2.0, scale: 2.0 / self.n as f64 }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.params.pdf(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.params.cdf(x)
    }

    pub fn mean(&self) -> f64 {
        nakagami_mean_var(self.n).map(|m| m.0).unwrap_or(f64::NAN)
    }

    pub fn variance(&self) -> f64 {
        nakagami_mean_var(self.n).map(|m| m.1).unwrap_or(f64::NAN)
    }
}

pub fn derive_analytic_model(n: u64) -> Result<AnalyticRmseModel> {
    AnalyticRmseModel::new(n)
}

/// Monte-Carlo estimate against the closed form.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McCheckReport {
    pub n: u64,
    pub trials: usize,
    pub ks_distance: f64,
    pub analytic_mean: f64,
    pub mc_mean: f64,
    pub mean_se: f64,
    pub analytic_variance: f64,
    pub mc_variance: f64,
    pub variance_se: f64,
}

impl McCheckReport {
    pub fn mean_error(&self) -> f64 {
        self.mc_mean - self.analytic_mean
    }

    pub fn variance_error(&self) -> f64 {
        self.mc_variance - self.analytic_variance
    }

    /// Mean and variance both within `k` standard errors.
    pub fn within(&self, k: f64) -> bool {
        self.mean_error().abs() <= k * self.mean_se && self.variance_error().abs() <= k * self.variance_se
    }
}

pub const MIN_CHECK_TRIALS: usize = 10_000;

pub fn analytic_vs_mc_check(n: u64, trials: usize, seed: RandomSeed, exec: &dyn Executor) -> Result<McCheckReport> {
    if trials < MIN_CHECK_TRIALS {
        return Err(Error::param("trials", "need at least 10^4"));
    }
    let model = AnalyticRmseModel::new(n)?;
    let ratings = RatingDistributionSet::standard(n as usize)?;
    let predictors = ratings.mean_predictor("perfect");
    let sample = sample_metric(&ratings, &predictors, MetricKind::Rmse, trials, seed, exec)?;
    let mut sorted: Vec<f64> = sample.values.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(McCheckReport {
        n,
        trials,
        ks_distance: ks_distance_to(&sorted, |x| model.cdf(x)),
        analytic_mean: model.mean(),
        mc_mean: sample.mean(),
        mean_se: sample.mean_se(),
        analytic_variance: model.variance(),
        mc_variance: sample.variance(),
        variance_se: sample.variance_se(),
    })
}

//! Method uncertainty: confidence intervals of the rating parameters,
//! borderline scenarios built from their endpoints, and the convergence of
//! those scenarios as the number of re-ratings grows.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::compare::{error_probability, Pairing};
use crate::density::{common_densities, intersection_area, EmpiricalDensity};
use crate::dist::{quantile_chi2, quantile_t, GaussianParams};
use crate::exec::Executor;
use crate::metric::{sample_metric, MetricKind, PredictorSet, RatingDistributionSet};
use crate::rng::RandomSeed;
use crate::tensor::{ParameterTable, RatingTensor};
use crate::{Error, Result};

/// Point estimates of one slice.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParameterEstimate {
    pub mean: f64,
    /// Bessel-corrected standard deviation; `None` for a single observation.
    pub sd: Option<f64>,
    pub n_obs: usize,
}

impl ParameterEstimate {
    pub fn new(mean: f64, sd: f64, n_obs: usize) -> Result<Self> {
        if !mean.is_finite() || !(sd >= 0.0) || !sd.is_finite() {
            return Err(Error::param("estimate", "need finite mean and sd >= 0"));
        }
        if n_obs < 2 {
            return Err(Error::param("n_obs", "need at least 2 observations for sd"));
        }
        Ok(Self { mean, sd: Some(sd), n_obs })
    }

    /// `values` must be non-empty.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = (n >= 2).then(|| {
            let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        Self { mean, sd, n_obs: n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfidenceIntervalPair {
    pub mu: (f64, f64),
    pub sigma: (f64, f64),
    pub alpha: f64,
}

/// Multipliers of `s` for the interval endpoints at sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiFactors {
    /// `t(1 − α/2; n − 1)/√n`
    pub mu_half: f64,
    /// `√((n − 1)/χ²(1 − α/2; n − 1))`
    pub sigma_low: f64,
    /// `√((n − 1)/χ²(α/2; n − 1))`
    pub sigma_high: f64,
}

impl CiFactors {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n_obs", "need at least 2 observations"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", "must lie in (0, 1)"));
        }
        let k = (n - 1) as u64;
        let dof = k as f64;
        Ok(Self {
            mu_half: quantile_t(1.0 - alpha / 2.0, k)? / (n as f64).sqrt(),
            sigma_low: (dof / quantile_chi2(1.0 - alpha / 2.0, k)?).sqrt(),
            sigma_high: (dof / quantile_chi2(alpha / 2.0, k)?).sqrt(),
        })
    }

    pub fn apply(&self, mean: f64, sd: f64, alpha: f64) -> ConfidenceIntervalPair {
        let h = self.mu_half * sd;
        ConfidenceIntervalPair {
            mu: (mean - h, mean + h),
            sigma: (sd * self.sigma_low, sd * self.sigma_high),
            alpha,
        }
    }
}

pub fn confidence_intervals(est: &ParameterEstimate, alpha: f64) -> Result<ConfidenceIntervalPair> {
    confidence_intervals_at(est, alpha, est.n_obs)
}

/// Intervals with `n` substituted for the observed count, keeping the point
/// estimates fixed.
pub fn confidence_intervals_at(est: &ParameterEstimate, alpha: f64, n: usize) -> Result<ConfidenceIntervalPair> {
    let sd = est.sd.ok_or_else(|| Error::param("n_obs", "need at least 2 observations"))?;
    Ok(CiFactors::new(n, alpha)?.apply(est.mean, sd, alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CaseKind {
    Minimum,
    Maximum,
}

impl CaseKind {
    pub const BOTH: [CaseKind; 2] = [CaseKind::Minimum, CaseKind::Maximum];

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Minimum => "minimum",
            CaseKind::Maximum => "maximum",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BorderlineScenario {
    pub case: CaseKind,
    pub ratings: RatingDistributionSet,
}

/// Every pair at its lower (minimum) or upper (maximum) interval endpoints.
/// With `n_override` the intervals use that sample size instead of the
/// observed one.
pub fn build_borderline(
    estimates: &ParameterTable,
    alpha: f64,
    case: CaseKind,
    n_override: Option<usize>,
) -> Result<BorderlineScenario> {
    let mut cache: BTreeMap<usize, CiFactors> = BTreeMap::new();
    let mut entries = BTreeMap::new();
    for (pair, est) in estimates {
        let n = n_override.unwrap_or(est.n_obs);
        let sd = est
            .sd
            .ok_or_else(|| Error::Data(format!("pair {pair}: one observation, sd undefined")))?;
        let factors = match cache.get(&n) {
            Some(f) => *f,
            None => {
                let f = CiFactors::new(n, alpha)?;
                cache.insert(n, f);
                f
            }
        };
        let ci = factors.apply(est.mean, sd, alpha);
        let (mu, sigma) = match case {
            CaseKind::Minimum => (ci.mu.0, ci.sigma.0),
            CaseKind::Maximum => (ci.mu.1, ci.sigma.1),
        };
        entries.insert(*pair, GaussianParams::new(mu, sigma)?);
    }
    Ok(BorderlineScenario { case, ratings: RatingDistributionSet::new(entries)? })
}

/// The mean predictor `R1` followed by single-trial predictors `R2, R3, …`
/// (trial `k − 1` for `R_k`), at most six systems.
pub fn recommender_family(tensor: &RatingTensor) -> Result<Vec<PredictorSet>> {
    let t = tensor.min_trials();
    if t < 2 {
        return Err(Error::Data("need at least 2 trials per pair".into()));
    }
    let mean = tensor.slices().iter().map(|(p, v)| (*p, v.iter().sum::<f64>() / v.len() as f64)).collect();
    let mut family = alloc::vec![PredictorSet::new("R1", mean)?];
    for k in 2..=(t + 1).min(6) {
        family.push(PredictorSet::new(format!("R{k}"), tensor.trial_column(k - 1)?)?);
    }
    Ok(family)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemDensity {
    pub label: alloc::string::String,
    pub mean: f64,
    pub variance: f64,
    pub density: EmpiricalDensity,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CaseDensities {
    pub case: CaseKind,
    pub systems: Vec<SystemDensity>,
    /// `(i, j, ∫ min(f_i, f_j))` for every pair of systems.
    pub intersections: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BorderlineReport {
    pub alpha: f64,
    pub tau: usize,
    pub cases: Vec<CaseDensities>,
}

fn case_label(case: CaseKind) -> u64 {
    match case {
        CaseKind::Minimum => 1,
        CaseKind::Maximum => 2,
    }
}

/// RMSE densities of each system under both borderline cases. Densities of
/// one case share a grid.
pub fn simulate_borderline_rmse(
    tensor: &RatingTensor,
    family: &[PredictorSet],
    alpha: f64,
    tau: usize,
    bins: usize,
    seed: RandomSeed,
    exec: &dyn Executor,
) -> Result<BorderlineReport> {
    if tensor.min_trials() < 2 {
        return Err(Error::Data("need at least 2 trials per pair".into()));
    }
    let estimates = tensor.estimate_parameters();
    let mut cases = Vec::new();
    for case in CaseKind::BOTH {
        let scenario = build_borderline(&estimates, alpha, case, None)?;
        let case_seed = seed.derive(case_label(case));
        let samples = family
            .iter()
            .enumerate()
            .map(|(k, p)| sample_metric(&scenario.ratings, p, MetricKind::Rmse, tau, case_seed.derive(k as u64), exec))
            .collect::<Result<Vec<_>>>()?;
        let views: Vec<&[f64]> = samples.iter().map(|s| s.values.as_slice()).collect();
        let densities = common_densities(&views, bins)?;
        let mut intersections = Vec::new();
        for i in 0..densities.len() {
            for j in i + 1..densities.len() {
                intersections.push((i, j, intersection_area(&densities[i], &densities[j])));
            }
        }
        let systems = family
            .iter()
            .zip(samples.iter().zip(densities))
            .map(|(p, (s, density))| SystemDensity {
                label: p.label.clone(),
                mean: s.mean(),
                variance: s.variance(),
                density,
            })
            .collect();
        cases.push(CaseDensities { case, systems, intersections });
    }
    Ok(BorderlineReport { alpha, tau, cases })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntersectionPoint {
    pub n: usize,
    pub intersection: f64,
    /// Rough Monte-Carlo standard error of the intersection.
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorPoint {
    pub n: usize,
    pub p_min: f64,
    pub p_max: f64,
}

fn check_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.is_empty() || n_grid.iter().any(|&n| n < 2) || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("n_grid", "need increasing sizes, each at least 2"));
    }
    Ok(())
}

/// Shared mass of the minimum- and maximum-case RMSE densities as the
/// artificial sample size grows.
#[allow(clippy::too_many_arguments)]
pub fn convergence_intersection(
    estimates: &ParameterTable,
    predictors: &PredictorSet,
    n_grid: &[usize],
    alpha: f64,
    tau: usize,
    bins: usize,
    seed: RandomSeed,
    exec: &dyn Executor,
) -> Result<Vec<IntersectionPoint>> {
    check_grid(n_grid)?;
    n_grid
        .iter()
        .map(|&n| {
            let point_seed = seed.derive(n as u64);
            let mut samples = Vec::new();
            for case in CaseKind::BOTH {
                let scenario = build_borderline(estimates, alpha, case, Some(n))?;
                samples.push(sample_metric(
                    &scenario.ratings,
                    predictors,
                    MetricKind::Rmse,
                    tau,
                    point_seed.derive(case_label(case)),
                    exec,
                )?);
            }
            let d = common_densities(&[&samples[0].values, &samples[1].values], bins)?;
            let intersection = intersection_area(&d[0], &d[1]);
            let mut var = 0.0;
            for ((h1, h2), e) in d[0].heights.iter().zip(&d[1].heights).zip(d[0].edges.windows(2)) {
                let p = h1.min(*h2) * (e[1] - e[0]);
                var += p * (1.0 - p);
            }
            Ok(IntersectionPoint { n, intersection, se: (var / tau as f64).sqrt() })
        })
        .collect()
}

/// Error probability of ranking `first` against `second` in both borderline
/// cases as the artificial sample size grows.
#[allow(clippy::too_many_arguments)]
pub fn convergence_error_probability(
    estimates: &ParameterTable,
    first: &PredictorSet,
    second: &PredictorSet,
    n_grid: &[usize],
    alpha: f64,
    tau: usize,
    pairing: Pairing,
    seed: RandomSeed,
    exec: &dyn Executor,
) -> Result<Vec<ErrorPoint>> {
    check_grid(n_grid)?;
    n_grid
        .iter()
        .map(|&n| {
            let point_seed = seed.derive(n as u64);
            let mut p = [0.0; 2];
            for (slot, case) in CaseKind::BOTH.into_iter().enumerate() {
                let scenario = build_borderline(estimates, alpha, case, Some(n))?;
                let case_seed = point_seed.derive(case_label(case));
                let second_seed = match pairing {
                    Pairing::Paired => case_seed,
                    Pairing::Independent => case_seed.derive(1),
                };
                let a = sample_metric(&scenario.ratings, first, MetricKind::Rmse, tau, case_seed, exec)?;
                let b = sample_metric(&scenario.ratings, second, MetricKind::Rmse, tau, second_seed, exec)?;
                p[slot] = error_probability(&a, &b, pairing, crate::density::DEFAULT_BINS)?.p_error;
            }
            Ok(ErrorPoint { n, p_min: p[0], p_max: p[1] })
        })
        .collect()
}

/// Empirical exponents `q` in `width ∝ n^{−q}` for the μ and σ intervals,
/// by least squares on the log-log widths.
pub fn ci_width_exponents(n_grid: &[usize], alpha: f64) -> Result<(f64, f64)> {
    check_grid(n_grid)?;
    if n_grid.len() < 2 {
        return Err(Error::param("n_grid", "need at least two sizes"));
    }
    let mut xs = Vec::new();
    let mut mu_w = Vec::new();
    let mut sigma_w = Vec::new();
    for &n in n_grid {
        let f = CiFactors::new(n, alpha)?;
        xs.push((n as f64).ln());
        mu_w.push((2.0 * f.mu_half).ln());
        sigma_w.push((f.sigma_high - f.sigma_low).ln());
    }
    Ok((-slope(&xs, &mu_w), -slope(&xs, &sigma_w)))
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

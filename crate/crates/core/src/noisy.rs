//! Noise-injection studies against the theoretical optimum.
//!
//! The optimum predicts each pair's mean rating. Distorted copies scale every
//! prediction by `1 + p·w_ν`, where the directions `w_ν ~ U[−1, 1]` are drawn
//! once per noise seed, so `π_ν(1 + p·w_ν)` is uniform on
//! `[(1 − p)π_ν, (1 + p)π_ν]` and copies at different `p` share directions.
//! Results are averaged over several noise seeds; the spread across seeds is
//! the band produced by the uniform noise itself.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;

use crate::compare::{prob_greater, Pairing};
use crate::exec::Executor;
use crate::metric::{sample_metric, MetricKind, MetricSample, PredictorSet, RatingDistributionSet};
use crate::rng::RandomSeed;
use crate::significance::{sample_srmse, SrmseMode};
use crate::tensor::{PairIndex, RatingTensor};
use crate::dist::GaussianParams;
use crate::{Error, Result};

/// Predictors equal to the per-slice mean ratings.
pub fn optimal_recommender(tensor: &RatingTensor) -> Result<PredictorSet> {
    let entries = tensor
        .slices()
        .iter()
        .map(|(p, v)| {
            if v.is_empty() {
                return Err(Error::Data(alloc::format!("pair {p}: empty slice")));
            }
            Ok((*p, v.iter().sum::<f64>() / v.len() as f64))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    PredictorSet::new("optimal", entries)
}

/// Fitted rating distributions `N(x̄, s)` of a tensor.
pub fn fitted_ratings(tensor: &RatingTensor) -> Result<RatingDistributionSet> {
    let entries = tensor
        .estimate_parameters()
        .into_iter()
        .map(|(p, e)| {
            let sd = e
                .sd
                .ok_or_else(|| Error::Data(alloc::format!("pair {p}: one observation, sd undefined")))?;
            Ok((p, GaussianParams::new(e.mean, sd)?))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    RatingDistributionSet::new(entries)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseSpec {
    pub p: f64,
    pub seed: RandomSeed,
}

/// Directions `w_ν ~ U[−1, 1]` in pair order.
pub fn noise_directions(pairs: impl Iterator<Item = PairIndex>, seed: RandomSeed) -> BTreeMap<PairIndex, f64> {
    let mut rng = seed.rng();
    pairs.map(|p| (p, 2.0 * rng.random::<f64>() - 1.0)).collect()
}

fn scaled(predictors: &PredictorSet, directions: &BTreeMap<PairIndex, f64>, p: f64) -> PredictorSet {
    predictors.map(alloc::format!("{}+{p}", predictors.label), |k, v| v * (1.0 + p * directions[&k]))
}

/// Resample every prediction uniformly in `[(1 − p)π, (1 + p)π]`.
pub fn distort(predictors: &PredictorSet, noise: NoiseSpec) -> Result<PredictorSet> {
    if !(noise.p >= 0.0) || !noise.p.is_finite() {
        return Err(Error::param("p", "must be finite and non-negative"));
    }
    let w = noise_directions(predictors.entries().keys().copied(), noise.seed);
    Ok(scaled(predictors, &w, noise.p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum MetricConfig {
    Rmse,
    Mae,
    Msd,
    Srmse { alpha: f64, mode: SrmseMode },
}

impl MetricConfig {
    pub fn kind(&self) -> MetricKind {
        match self {
            MetricConfig::Rmse => MetricKind::Rmse,
            MetricConfig::Mae => MetricKind::Mae,
            MetricConfig::Msd => MetricKind::Msd,
            MetricConfig::Srmse { .. } => MetricKind::Srmse,
        }
    }

    pub fn sample(
        &self,
        ratings: &RatingDistributionSet,
        predictors: &PredictorSet,
        tau: usize,
        seed: RandomSeed,
        exec: &dyn Executor,
    ) -> Result<MetricSample> {
        match *self {
            MetricConfig::Srmse { alpha, mode } => sample_srmse(ratings, predictors, alpha, tau, seed, mode, exec),
            other => sample_metric(ratings, predictors, other.kind(), tau, seed, exec),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StudyConfig {
    pub metric: MetricConfig,
    pub tau: usize,
    pub pairing: Pairing,
    /// Independent noise draws averaged per grid point.
    pub noise_seeds: usize,
    /// `P_ε` below which a difference counts as evident.
    pub threshold: f64,
    /// Trials for the expectations driving adaptive noise.
    pub expectation_tau: usize,
    /// Upper end of the adaptive-noise search.
    pub p_max: f64,
    pub seed: RandomSeed,
}

impl StudyConfig {
    pub fn new(metric: MetricConfig, tau: usize, seed: RandomSeed) -> Self {
        Self {
            metric,
            tau,
            pairing: Pairing::Independent,
            noise_seeds: 3,
            threshold: 0.05,
            expectation_tau: 20_000,
            p_max: 2.0,
            seed,
        }
    }
}

/// `P_ε` at one grid point, averaged over noise seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub x: f64,
    pub p_error: f64,
    pub min: f64,
    pub max: f64,
    /// Monte-Carlo standard error of `p_error`.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdReport {
    pub metric: MetricKind,
    /// First grid noise level where the mean curve falls below the threshold.
    pub threshold_p: Option<f64>,
    /// Smallest and largest per-seed thresholds.
    pub band: (Option<f64>, Option<f64>),
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OffsetCurve {
    pub delta: f64,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GapPoint {
    pub offset: f64,
    /// Mean added noise level reaching the gap; `None` if out of reach.
    pub p_needed: Option<f64>,
    pub p_error: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GapCurve {
    pub gap: f64,
    pub points: Vec<GapPoint>,
}

/// First `x` whose value is below `threshold`.
pub fn first_below(points: impl IntoIterator<Item = (f64, f64)>, threshold: f64) -> Option<f64> {
    points.into_iter().find(|&(_, v)| v < threshold).map(|(x, _)| x)
}

// stream labels
const BASE: u64 = 1;
const NOISE: u64 = 2;
const SYSTEM_A: u64 = 3;
const SYSTEM_B: u64 = 4;
const EXPECT: u64 = 5;

pub struct NoiseStudy<'a> {
    ratings: RatingDistributionSet,
    optimum: PredictorSet,
    config: StudyConfig,
    exec: &'a dyn Executor,
}

impl<'a> NoiseStudy<'a> {
    pub fn new(ratings: RatingDistributionSet, optimum: PredictorSet, config: StudyConfig, exec: &'a dyn Executor) -> Result<Self> {
        crate::metric::check_tau(config.tau)?;
        crate::metric::check_tau(config.expectation_tau)?;
        if config.noise_seeds == 0 {
            return Err(Error::param("noise_seeds", "need at least one"));
        }
        if !(config.threshold > 0.0 && config.threshold < 1.0) {
            return Err(Error::param("threshold", "must lie in (0, 1)"));
        }
        if !(config.p_max > 0.0) {
            return Err(Error::param("p_max", "must be positive"));
        }
        Ok(Self { ratings, optimum, config, exec })
    }

    /// Ratings `N(x̄, s)` fitted to the tensor, compared against its optimum.
    pub fn from_tensor(tensor: &RatingTensor, config: StudyConfig, exec: &'a dyn Executor) -> Result<Self> {
        Self::new(fitted_ratings(tensor)?, optimal_recommender(tensor)?, config, exec)
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn optimum(&self) -> &PredictorSet {
        &self.optimum
    }

    fn directions(&self, k: usize) -> BTreeMap<PairIndex, f64> {
        noise_directions(self.optimum.entries().keys().copied(), self.config.seed.derive(NOISE).derive(k as u64))
    }

    fn sample(&self, predictors: &PredictorSet, seed: RandomSeed) -> Result<MetricSample> {
        self.config.metric.sample(&self.ratings, predictors, self.config.tau, seed, self.exec)
    }

    /// Seed of the second system; the first always uses `first`.
    fn second_seed(&self, first: RandomSeed, own: RandomSeed) -> RandomSeed {
        match self.config.pairing {
            Pairing::Paired => first,
            Pairing::Independent => own,
        }
    }

    /// `P_ε` oriented by sample means.
    fn p_error(&self, a: &MetricSample, b: &MetricSample) -> Result<f64> {
        if a.mean() <= b.mean() {
            prob_greater(&a.values, &b.values, self.config.pairing)
        } else {
            prob_greater(&b.values, &a.values, self.config.pairing)
        }
    }

    fn se(&self, p: f64) -> f64 {
        let factor = match self.config.pairing {
            Pairing::Paired => 1.0,
            Pairing::Independent => 2.0,
        };
        (factor * p * (1.0 - p) / self.config.tau as f64).sqrt() / (self.config.noise_seeds as f64).sqrt()
    }

    fn point(&self, x: f64, per_seed: &[f64]) -> CurvePoint {
        let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
        CurvePoint {
            x,
            p_error: mean,
            min: per_seed.iter().copied().fold(f64::INFINITY, f64::min),
            max: per_seed.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            se: self.se(mean),
        }
    }

    /// Optimum against distorted copies over a grid of noise levels.
    pub fn threshold_curve(&self, p_grid: &[f64]) -> Result<ThresholdReport> {
        check_grid("p_grid", p_grid)?;
        let base_seed = self.config.seed.derive(BASE);
        let base = self.sample(&self.optimum, base_seed)?;
        let k_seeds = self.config.noise_seeds;
        let mut per_seed = vec![vec![0.0; p_grid.len()]; k_seeds];
        for (k, row) in per_seed.iter_mut().enumerate() {
            let w = self.directions(k);
            let seed = self.second_seed(base_seed, self.config.seed.derive(SYSTEM_B).derive(k as u64));
            for (slot, &p) in row.iter_mut().zip(p_grid) {
                let distorted = self.sample(&scaled(&self.optimum, &w, p), seed)?;
                *slot = self.p_error(&base, &distorted)?;
            }
        }
        let curve: Vec<CurvePoint> = p_grid
            .iter()
            .enumerate()
            .map(|(i, &p)| self.point(p, &per_seed.iter().map(|r| r[i]).collect::<Vec<_>>()))
            .collect();
        let thresholds: Vec<Option<f64>> = per_seed
            .iter()
            .map(|row| first_below(p_grid.iter().copied().zip(row.iter().copied()), self.config.threshold))
            .collect();
        let band = if thresholds.iter().all(Option::is_some) {
            let ts: Vec<f64> = thresholds.iter().flatten().copied().collect();
            (
                Some(ts.iter().copied().fold(f64::INFINITY, f64::min)),
                Some(ts.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            )
        } else {
            (thresholds.iter().flatten().copied().reduce(f64::min), None)
        };
        Ok(ThresholdReport {
            metric: self.config.metric.kind(),
            threshold_p: first_below(curve.iter().map(|c| (c.x, c.p_error)), self.config.threshold),
            band,
            curve,
        })
    }

    /// Copy A at noise `offset`, copy B at `offset + delta`, along the same
    /// directions.
    pub fn offset_resolution_curves(&self, deltas: &[f64], offsets: &[f64]) -> Result<Vec<OffsetCurve>> {
        if deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::param("deltas", "must be positive"));
        }
        check_grid("offsets", offsets)?;
        let k_seeds = self.config.noise_seeds;
        let mut curves = Vec::new();
        for &delta in deltas {
            let mut per_seed = vec![vec![0.0; offsets.len()]; k_seeds];
            for (k, row) in per_seed.iter_mut().enumerate() {
                let w = self.directions(k);
                let seed_a = self.config.seed.derive(SYSTEM_A).derive(k as u64);
                let seed_b = self.second_seed(seed_a, self.config.seed.derive(SYSTEM_B).derive(k as u64));
                for (slot, &o) in row.iter_mut().zip(offsets) {
                    let a = self.sample(&scaled(&self.optimum, &w, o), seed_a)?;
                    let b = self.sample(&scaled(&self.optimum, &w, o + delta), seed_b)?;
                    *slot = self.p_error(&a, &b)?;
                }
            }
            let points = offsets
                .iter()
                .enumerate()
                .map(|(i, &o)| self.point(o, &per_seed.iter().map(|r| r[i]).collect::<Vec<_>>()))
                .collect();
            curves.push(OffsetCurve { delta, points });
        }
        Ok(curves)
    }

    fn expectation(&self, w: &BTreeMap<PairIndex, f64>, p: f64, seed: RandomSeed) -> Result<f64> {
        let s = self.config.metric.sample(&self.ratings, &scaled(&self.optimum, w, p), self.config.expectation_tau, seed, self.exec)?;
        Ok(s.mean())
    }

    fn adaptive_with(&self, w: &BTreeMap<PairIndex, f64>, k: usize, base_offset: f64, target_gap: f64, tolerance: f64) -> Result<f64> {
        if !(base_offset >= 0.0) || !(target_gap >= 0.0) {
            return Err(Error::param("gap", "offset and target gap must be non-negative"));
        }
        if target_gap == 0.0 {
            return Ok(base_offset);
        }
        let seed = self.config.seed.derive(EXPECT).derive(k as u64);
        let e0 = self.expectation(w, base_offset, seed)?;
        if !(e0 > 0.0) {
            return Err(Error::Numerical("base expectation is not positive"));
        }
        let gap = |p: f64| -> Result<f64> { Ok((self.expectation(w, p, seed)? - e0) / e0) };
        let (mut lo, mut hi) = (base_offset, self.config.p_max.max(base_offset));
        let g_hi = gap(hi)?;
        if g_hi < target_gap {
            return Err(Error::Unreachable { target: target_gap, low: lo, high: hi, gap_low: 0.0, gap_high: g_hi });
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let g = gap(mid)?;
            if (g - target_gap).abs() <= tolerance * target_gap {
                return Ok(mid);
            }
            if g < target_gap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Noise level whose expected metric exceeds the copy at `base_offset`
    /// by the relative `target_gap`, for noise seed 0.
    pub fn adaptive_noise_for_gap(&self, base_offset: f64, target_gap: f64, tolerance: f64) -> Result<NoiseSpec> {
        let w = self.directions(0);
        let p = self.adaptive_with(&w, 0, base_offset, target_gap, tolerance)?;
        Ok(NoiseSpec { p, seed: self.config.seed.derive(NOISE).derive(0) })
    }

    /// For each target gap and base offset, the `P_ε` between the copy at
    /// the offset and the copy whose expectation is `gap` higher.
    pub fn gap_resolution_curves(&self, gaps: &[f64], offsets: &[f64], tolerance: f64) -> Result<Vec<GapCurve>> {
        check_grid("offsets", offsets)?;
        let k_seeds = self.config.noise_seeds;
        let mut curves = Vec::new();
        for &gap in gaps {
            let mut points = Vec::new();
            for &o in offsets {
                let mut ps = Vec::new();
                let mut errs = Vec::new();
                let mut reachable = true;
                for k in 0..k_seeds {
                    let w = self.directions(k);
                    let p = match self.adaptive_with(&w, k, o, gap, tolerance) {
                        Ok(p) => p,
                        Err(Error::Unreachable { .. }) => {
                            reachable = false;
                            break;
                        }
                        Err(e) => return Err(e),
                    };
                    let seed_a = self.config.seed.derive(SYSTEM_A).derive(k as u64);
                    let seed_b = self.second_seed(seed_a, self.config.seed.derive(SYSTEM_B).derive(k as u64));
                    let a = self.sample(&scaled(&self.optimum, &w, o), seed_a)?;
                    let b = self.sample(&scaled(&self.optimum, &w, p), seed_b)?;
                    ps.push(p);
                    errs.push(self.p_error(&a, &b)?);
                }
                points.push(if reachable {
                    let c = self.point(o, &errs);
                    GapPoint {
                        offset: o,
                        p_needed: Some(ps.iter().sum::<f64>() / ps.len() as f64),
                        p_error: Some(c.p_error),
                        min: Some(c.min),
                        max: Some(c.max),
                    }
                } else {
                    GapPoint { offset: o, p_needed: None, p_error: None, min: None, max: None }
                });
            }
            curves.push(GapCurve { gap, points });
        }
        Ok(curves)
    }
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(name, "need an increasing grid of non-negative values"));
    }
    Ok(())
}

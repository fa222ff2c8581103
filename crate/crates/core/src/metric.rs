//! Monte-Carlo propagation of rating uncertainty into accuracy metrics.
//!
//! Trial `j` draws every `r_ν ~ N(μ_ν, σ_ν)` from sub-stream `j` of the seed
//! and evaluates the metric on the deviations `d_ν = π_ν − r_ν`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::dist::GaussianParams;
use crate::exec::Executor;
use crate::rng::{standard_normal, RandomSeed};
use crate::tensor::PairIndex;
use crate::{Error, Result};

/// One rating distribution per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingDistributionSet {
    entries: BTreeMap<PairIndex, GaussianParams>,
}

impl RatingDistributionSet {
    pub fn new(entries: BTreeMap<PairIndex, GaussianParams>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::param("ratings", "need at least one pair"));
        }
        Ok(Self { entries })
    }

    /// `n` i.i.d. `N(0, 1)` ratings on pairs `(0, 0..n)`.
    pub fn standard(n: usize) -> Result<Self> {
        let entries = (0..n as u32)
            .map(|i| (PairIndex::new(0, i), GaussianParams::standard()))
            .collect();
        Self::new(entries)
    }

    pub fn entries(&self) -> &BTreeMap<PairIndex, GaussianParams> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Predictors equal to the distribution means.
    pub fn mean_predictor(&self, label: &str) -> PredictorSet {
        PredictorSet {
            label: label.into(),
            entries: self.entries.iter().map(|(k, g)| (*k, g.mu)).collect(),
        }
    }
}

/// Predictions `π_ν` of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorSet {
    pub label: String,
    entries: BTreeMap<PairIndex, f64>,
}

impl PredictorSet {
    pub fn new(label: impl Into<String>, entries: BTreeMap<PairIndex, f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::param("predictors", "need at least one pair"));
        }
        if entries.values().any(|x| !x.is_finite()) {
            return Err(Error::param("predictors", "values must be finite"));
        }
        Ok(Self { label: label.into(), entries })
    }

    pub fn entries(&self) -> &BTreeMap<PairIndex, f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.values().copied()
    }

    /// Same pairs, values replaced through `f(pair, value)`.
    pub fn map(&self, label: impl Into<String>, mut f: impl FnMut(PairIndex, f64) -> f64) -> Self {
        Self {
            label: label.into(),
            entries: self.entries.iter().map(|(k, v)| (*k, f(*k, *v))).collect(),
        }
    }
}

/// Ratings and predictions as parallel vectors, in pair order.
#[derive(Debug, Clone)]
pub(crate) struct Aligned {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub pi: Vec<f64>,
}

pub(crate) fn align(ratings: &RatingDistributionSet, predictors: &PredictorSet) -> Result<Aligned> {
    let (a, b) = (ratings.entries(), predictors.entries());
    let mut left = a.keys();
    let mut right = b.keys();
    loop {
        match (left.next(), right.next()) {
            (None, None) => break,
            (Some(p), None) => {
                return Err(Error::Misaligned { pair: *p, reason: "missing prediction" });
            }
            (None, Some(p)) => {
                return Err(Error::Misaligned { pair: *p, reason: "missing rating distribution" });
            }
            (Some(p), Some(q)) if p != q => {
                let (pair, reason) = if p < q {
                    (*p, "missing prediction")
                } else {
                    (*q, "missing rating distribution")
                };
                return Err(Error::Misaligned { pair, reason });
            }
            _ => {}
        }
    }
    Ok(Aligned {
        mu: a.values().map(|g| g.mu).collect(),
        sigma: a.values().map(|g| g.sigma).collect(),
        pi: b.values().copied().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MetricKind {
    Rmse,
    Srmse,
    Mae,
    Msd,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Rmse => "rmse",
            MetricKind::Srmse => "srmse",
            MetricKind::Mae => "mae",
            MetricKind::Msd => "msd",
        }
    }
}

/// `τ` realizations of a metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub kind: MetricKind,
    pub values: Vec<f64>,
    /// Number of pairs entering each value.
    pub n: usize,
    pub seed: RandomSeed,
}

impl MetricSample {
    pub fn tau(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Unbiased sample variance; 0 for a single value.
    pub fn variance(&self) -> f64 {
        variance(&self.values)
    }

    /// Standard error of the mean.
    pub fn mean_se(&self) -> f64 {
        (self.variance() / self.tau() as f64).sqrt()
    }

    /// Approximate standard error of the sample variance, `√((m₄ − s⁴)/τ)`.
    pub fn variance_se(&self) -> f64 {
        let m = self.mean();
        let tau = self.tau() as f64;
        let m4 = self.values.iter().map(|x| (x - m).powi(4)).sum::<f64>() / tau;
        let s2 = self.variance();
        ((m4 - s2 * s2).max(0.0) / tau).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub(crate) fn check_tau(tau: usize) -> Result<()> {
    if tau == 0 {
        return Err(Error::param("tau", "need at least one trial"));
    }
    if tau > u32::MAX as usize {
        return Err(Error::param("tau", "at most 2^32 - 1 trials"));
    }
    Ok(())
}

/// Draw `τ` values of RMSE, MAE or MSD. Use
/// [`sample_srmse`](crate::significance::sample_srmse) for the sRMSE.
pub fn sample_metric(
    ratings: &RatingDistributionSet,
    predictors: &PredictorSet,
    kind: MetricKind,
    tau: usize,
    seed: RandomSeed,
    exec: &dyn Executor,
) -> Result<MetricSample> {
    check_tau(tau)?;
    if kind == MetricKind::Srmse {
        return Err(Error::param("kind", "sRMSE needs a significance level; use sample_srmse"));
    }
    let a = align(ratings, predictors)?;
    let n = a.mu.len();
    let inv_n = 1.0 / n as f64;
    let mut values = vec![0.0; tau];
    exec.fill(&mut values, &|offset, chunk| {
        let mut streams = seed.trial_streams();
        for (k, out) in chunk.iter_mut().enumerate() {
            let rng = streams.at((offset + k) as u64);
            let mut acc = 0.0;
            for i in 0..n {
                let r = a.mu[i] + a.sigma[i] * standard_normal(rng);
                let d = a.pi[i] - r;
                acc += match kind {
                    MetricKind::Rmse => d * d,
                    MetricKind::Mae => d.abs(),
                    _ => d,
                };
            }
            *out = match kind {
                MetricKind::Rmse => (acc * inv_n).sqrt(),
                _ => acc * inv_n,
            };
        }
    });
    Ok(MetricSample { kind, values, n, seed })
}

/// Metric value when every rating equals its mean (the point paradigm).
pub fn point_metric(ratings: &RatingDistributionSet, predictors: &PredictorSet, kind: MetricKind) -> Result<f64> {
    let a = align(ratings, predictors)?;
    let n = a.mu.len() as f64;
    let d = a.pi.iter().zip(&a.mu).map(|(p, m)| p - m);
    Ok(match kind {
        MetricKind::Rmse | MetricKind::Srmse => (d.map(|x| x * x).sum::<f64>() / n).sqrt(),
        MetricKind::Mae => d.map(f64::abs).sum::<f64>() / n,
        MetricKind::Msd => d.sum::<f64>() / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::nakagami_mean_var;
    use crate::exec::{Chunked, Sequential};

    fn set(params: &[(f64, f64)]) -> RatingDistributionSet {
        RatingDistributionSet::new(
            params
                .iter()
                .enumerate()
                .map(|(i, &(m, s))| (PairIndex::new(1, i as u32), GaussianParams::new(m, s).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_exact_predictor_gives_zero() {
        let r = set(&[(3.0, 0.0), (4.0, 0.0), (1.0, 0.0)]);
        let p = r.mean_predictor("R1");
        let s = sample_metric(&r, &p, MetricKind::Rmse, 100, RandomSeed::new(1), &Sequential).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degenerate_pairs_contribute_constant_deviation() {
        let r = set(&[(3.0, 0.0), (4.0, 0.0)]);
        let p = r.mean_predictor("R").map("R+1", |_, v| v + 1.0);
        let s = sample_metric(&r, &p, MetricKind::Rmse, 10, RandomSeed::new(1), &Sequential).unwrap();
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn iid_rmse_mean_matches_closed_form() {
        let n = 5;
        let r = RatingDistributionSet::standard(n).unwrap();
        let p = r.mean_predictor("R");
        let s = sample_metric(&r, &p, MetricKind::Rmse, 200_000, RandomSeed::new(3), &Sequential).unwrap();
        let (m, v) = nakagami_mean_var(n as u64).unwrap();
        assert!((s.mean() - m).abs() < 4.0 * s.mean_se());
        assert!((s.variance() - v).abs() < 4.0 * s.variance_se());
    }

    #[test]
    fn msd_is_linear() {
        let r = set(&[(3.0, 1.0), (2.0, 0.5), (4.0, 0.0)]);
        let p = r.mean_predictor("R").map("shifted", |k, v| v + 0.1 * k.item as f64);
        let s = sample_metric(&r, &p, MetricKind::Msd, 100_000, RandomSeed::new(4), &Sequential).unwrap();
        let expected = (0.0 + 0.1 + 0.2) / 3.0;
        assert!((s.mean() - expected).abs() < 4.0 * s.mean_se());
        let zero = sample_metric(&r, &r.mean_predictor("R"), MetricKind::Msd, 100_000, RandomSeed::new(4), &Sequential)
            .unwrap();
        assert!(zero.mean().abs() < 4.0 * zero.mean_se());
    }

    #[test]
    fn chunking_does_not_change_values() {
        let r = set(&[(3.0, 1.0), (2.0, 0.7), (4.0, 0.2)]);
        let p = r.mean_predictor("R").map("x", |_, v| v * 0.9);
        for kind in [MetricKind::Rmse, MetricKind::Mae, MetricKind::Msd] {
            let a = sample_metric(&r, &p, kind, 1000, RandomSeed::new(9), &Sequential).unwrap();
            let b = sample_metric(&r, &p, kind, 1000, RandomSeed::new(9), &Chunked(37)).unwrap();
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn misalignment_names_the_pair() {
        let r = set(&[(3.0, 1.0), (2.0, 1.0)]);
        let mut e = BTreeMap::new();
        e.insert(PairIndex::new(1, 0), 3.0);
        e.insert(PairIndex::new(2, 0), 3.0);
        let p = PredictorSet::new("bad", e).unwrap();
        match sample_metric(&r, &p, MetricKind::Rmse, 10, RandomSeed::new(1), &Sequential) {
            Err(Error::Misaligned { pair, .. }) => assert_eq!(pair, PairIndex::new(1, 1)),
            other => panic!("{other:?}"),
        }
        assert!(sample_metric(&r, &r.mean_predictor("x"), MetricKind::Rmse, 0, RandomSeed::new(1), &Sequential).is_err());
    }
}

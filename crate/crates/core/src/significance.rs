//! The significant RMSE (sRMSE).
//!
//! Around each predictor `π_ν` an acceptance interval `I_α = [π_ν − a, π_ν + a]`
//! holds `1 − α` of the rating density. Deviations of ratings inside it are
//! attributed to human noise; only those in the critical region (the
//! complement) count towards the sRMSE.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::dist::GaussianParams;
use crate::exec::Executor;
use crate::metric::{align, check_tau, MetricKind, MetricSample, PredictorSet, RatingDistributionSet};
use crate::rng::{standard_normal, RandomSeed};
use crate::special::std_normal_cdf;
use crate::tensor::PairIndex;
use crate::{Error, Result};

/// Search step for the interval half-width.
pub const HALF_WIDTH_STEP: f64 = 1e-3;
/// Rejection sampling aborts below this acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignificanceInterval {
    pub center: f64,
    pub half_width: f64,
    pub alpha: f64,
}

impl SignificanceInterval {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() <= self.half_width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SrmseMode {
    /// Every rating is drawn from its critical-region restriction.
    #[default]
    Conditional,
    /// Unconditional draws; only significant terms are averaged.
    Filtered,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", "must lie in (0, 1)"));
    }
    Ok(())
}

/// Rating mass inside `[center − a, center + a]`.
pub fn enclosed_mass(rating: GaussianParams, center: f64, a: f64) -> f64 {
    if rating.is_degenerate() {
        return if (rating.mu - center).abs() <= a { 1.0 } else { 0.0 };
    }
    let hi = (center + a - rating.mu) / rating.sigma;
    let lo = (center - a - rating.mu) / rating.sigma;
    (std_normal_cdf(hi) - std_normal_cdf(lo)).max(0.0)
}

/// Rating mass in the critical region, computed from both tails directly.
pub fn rejection_mass(rating: GaussianParams, interval: &SignificanceInterval) -> f64 {
    if rating.is_degenerate() {
        return if interval.contains(rating.mu) { 0.0 } else { 1.0 };
    }
    let hi = (interval.center + interval.half_width - rating.mu) / rating.sigma;
    let lo = (interval.center - interval.half_width - rating.mu) / rating.sigma;
    std_normal_cdf(lo) + std_normal_cdf(-hi)
}

/// Smallest half-width on the `10⁻³` grid whose interval around the
/// predictor encloses at least `1 − α` of the rating density.
pub fn critical_interval(rating: GaussianParams, predictor: f64, alpha: f64) -> Result<SignificanceInterval> {
    check_alpha(alpha)?;
    if !predictor.is_finite() {
        return Err(Error::param("predictor", "must be finite"));
    }
    if rating.is_degenerate() {
        return Ok(SignificanceInterval { center: predictor, half_width: 0.0, alpha });
    }
    let target = 1.0 - alpha;
    let mass = |a: f64| enclosed_mass(rating, predictor, a);
    let mut hi = (predictor - rating.mu).abs() + 10.0 * rating.sigma;
    while mass(hi) < target {
        hi *= 2.0;
    }
    // the enclosed mass is increasing in a, so the first grid point that
    // reaches the target lies just above the exact root
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let mut k = (hi / HALF_WIDTH_STEP).ceil();
    while k > 0.0 && mass((k - 1.0) * HALF_WIDTH_STEP) >= target {
        k -= 1.0;
    }
    while mass(k * HALF_WIDTH_STEP) < target {
        k += 1.0;
    }
    Ok(SignificanceInterval { center: predictor, half_width: k * HALF_WIDTH_STEP, alpha })
}

#[inline]
fn draw_outside<R: rand::Rng + ?Sized>(rating: GaussianParams, interval: &SignificanceInterval, rng: &mut R) -> f64 {
    loop {
        let x = rating.mu + rating.sigma * standard_normal(rng);
        if !interval.contains(x) {
            return x;
        }
    }
}

/// Rejection samples from the rating density restricted to the critical
/// region.
pub fn sample_conditional(
    rating: GaussianParams,
    interval: &SignificanceInterval,
    count: usize,
    seed: RandomSeed,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    let acceptance = rejection_mass(rating, interval);
    if acceptance < MIN_ACCEPTANCE {
        return Err(Error::RejectionMassTooSmall { pair: None, acceptance });
    }
    if rating.is_degenerate() {
        return Ok(vec![rating.mu; count]);
    }
    let mut rng = seed.rng();
    Ok((0..count).map(|_| draw_outside(rating, interval, &mut rng)).collect())
}

/// Draw `τ` sRMSE values.
pub fn sample_srmse(
    ratings: &RatingDistributionSet,
    predictors: &PredictorSet,
    alpha: f64,
    tau: usize,
    seed: RandomSeed,
    mode: SrmseMode,
    exec: &dyn Executor,
) -> Result<MetricSample> {
    check_alpha(alpha)?;
    check_tau(tau)?;
    let a = align(ratings, predictors)?;
    let n = a.mu.len();
    let pairs: Vec<PairIndex> = ratings.entries().keys().copied().collect();
    let mut params = Vec::with_capacity(n);
    let mut intervals = Vec::with_capacity(n);
    for i in 0..n {
        let g = GaussianParams { mu: a.mu[i], sigma: a.sigma[i] };
        let iv = critical_interval(g, a.pi[i], alpha)?;
        if mode == SrmseMode::Conditional && !g.is_degenerate() {
            let acceptance = rejection_mass(g, &iv);
            if acceptance < MIN_ACCEPTANCE {
                return Err(Error::RejectionMassTooSmall { pair: Some(pairs[i]), acceptance });
            }
        }
        params.push(g);
        intervals.push(iv);
    }
    let inv_n = 1.0 / n as f64;
    let mut values = vec![0.0; tau];
    exec.fill(&mut values, &|offset, chunk| {
        let mut streams = seed.trial_streams();
        for (k, out) in chunk.iter_mut().enumerate() {
            let rng = streams.at((offset + k) as u64);
            let mut acc = 0.0;
            let mut kept = 0usize;
            for i in 0..n {
                let g = params[i];
                match mode {
                    SrmseMode::Conditional => {
                        // constant raters carry their fixed deviation
                        let r = if g.is_degenerate() { g.mu } else { draw_outside(g, &intervals[i], rng) };
                        let d = a.pi[i] - r;
                        acc += d * d;
                    }
                    SrmseMode::Filtered => {
                        let r = g.mu + g.sigma * standard_normal(rng);
                        let d = a.pi[i] - r;
                        let significant = if g.is_degenerate() { d != 0.0 } else { !intervals[i].contains(r) };
                        if significant {
                            acc += d * d;
                            kept += 1;
                        }
                    }
                }
            }
            *out = match mode {
                SrmseMode::Conditional => (acc * inv_n).sqrt(),
                SrmseMode::Filtered if kept == 0 => 0.0,
                SrmseMode::Filtered => (acc / kept as f64).sqrt(),
            };
        }
    });
    Ok(MetricSample { kind: MetricKind::Srmse, values, n, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::metric::sample_metric;
    use alloc::collections::BTreeMap;
    use proptest::prelude::*;

    fn g(mu: f64, sigma: f64) -> GaussianParams {
        GaussianParams::new(mu, sigma).unwrap()
    }

    #[test]
    fn interval_matches_normal_quantiles() {
        let iv = critical_interval(g(2.0, 1.0), 2.0, 0.05).unwrap();
        assert!((iv.half_width - 1.960).abs() <= 1e-3 + 1e-12);
        let iv = critical_interval(g(0.0, 1.0), 0.0, 0.5).unwrap();
        assert!((iv.half_width - 0.6745).abs() <= 1e-3);
        let iv = critical_interval(g(3.0, 0.0), 2.5, 0.05).unwrap();
        assert_eq!(iv.half_width, 0.0);
        assert!(critical_interval(g(0.0, 1.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn interval_is_predictor_centered() {
        let iv = critical_interval(g(5.0, 1.0), 0.0, 0.05).unwrap();
        assert_eq!(iv.center, 0.0);
        assert!(iv.half_width > 5.0);
        let m = enclosed_mass(g(5.0, 1.0), 0.0, iv.half_width);
        assert!(m >= 0.95 && m < 0.95 + 2e-3);
    }

    #[test]
    fn conditional_draws_stay_outside() {
        let rating = g(1.0, 1.0);
        let iv = critical_interval(rating, 1.0, 0.05).unwrap();
        let xs = sample_conditional(rating, &iv, 100_000, RandomSeed::new(3)).unwrap();
        assert!(xs.iter().all(|x| (x - 1.0).abs() > 1.960 - 1e-3));
        let upper = xs.iter().filter(|&&x| x > 1.0).count() as f64 / xs.len() as f64;
        assert!((upper - 0.5).abs() < 4.0 * (0.25 / xs.len() as f64).sqrt());
        assert!((rejection_mass(rating, &iv) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn tiny_rejection_mass_is_refused() {
        let rating = g(0.0, 1.0);
        let iv = SignificanceInterval { center: 0.0, half_width: 6.0, alpha: 0.05 };
        assert!(matches!(
            sample_conditional(rating, &iv, 10, RandomSeed::new(1)),
            Err(Error::RejectionMassTooSmall { .. })
        ));
    }

    fn ratings(params: &[(f64, f64)]) -> RatingDistributionSet {
        RatingDistributionSet::new(
            params.iter().enumerate().map(|(i, &(m, s))| (PairIndex::new(0, i as u32), g(m, s))).collect(),
        )
        .unwrap()
    }

    #[test]
    fn conditional_exceeds_plain_rmse() {
        let r = ratings(&[(3.0, 1.0), (2.0, 0.5), (4.0, 0.8)]);
        let p = r.mean_predictor("opt");
        let s = sample_srmse(&r, &p, 0.05, 20_000, RandomSeed::new(1), SrmseMode::Conditional, &Sequential).unwrap();
        let plain = sample_metric(&r, &p, MetricKind::Rmse, 20_000, RandomSeed::new(1), &Sequential).unwrap();
        assert!(s.values.iter().all(|&v| v > plain.mean()));
        // E[Z² | |Z| > c] = 1 + c·φ(c)/Q(c)
        let c = 1.960;
        let tail = 1.0 + c * crate::special::std_normal_pdf(c) / std_normal_cdf(-c);
        let expected = (1.0 + 0.25 + 0.64) * tail / 3.0;
        let ms = s.values.iter().map(|v| v * v).sum::<f64>() / s.tau() as f64;
        assert!((ms / expected - 1.0).abs() < 0.02, "{ms} vs {expected}");
    }

    #[test]
    fn filtered_with_constant_raters_is_rmse() {
        let r = ratings(&[(3.0, 0.0), (2.0, 0.0)]);
        let mut e = BTreeMap::new();
        e.insert(PairIndex::new(0, 0), 4.0);
        e.insert(PairIndex::new(0, 1), 1.5);
        let p = PredictorSet::new("off", e).unwrap();
        let s = sample_srmse(&r, &p, 0.05, 100, RandomSeed::new(1), SrmseMode::Filtered, &Sequential).unwrap();
        let plain = sample_metric(&r, &p, MetricKind::Rmse, 100, RandomSeed::new(1), &Sequential).unwrap();
        assert_eq!(s.values, plain.values);
    }

    #[test]
    fn filtered_tends_to_rmse_as_alpha_grows() {
        let r = ratings(&[(3.0, 1.0), (2.0, 0.5)]);
        let p = r.mean_predictor("m").map("x", |_, v| v + 0.3);
        let s = sample_srmse(&r, &p, 0.999_999, 10_000, RandomSeed::new(2), SrmseMode::Filtered, &Sequential).unwrap();
        let plain = sample_metric(&r, &p, MetricKind::Rmse, 10_000, RandomSeed::new(2), &Sequential).unwrap();
        let same = s.values.iter().zip(&plain.values).filter(|(a, b)| a == b).count();
        assert!(same as f64 > 0.99 * 10_000.0);
        assert!((s.mean() - plain.mean()).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn enclosed_mass_is_near_target(mu in -3.0f64..3.0, sigma in 0.5f64..3.0, pi in -3.0f64..3.0, alpha in 0.01f64..0.9) {
            let rating = g(mu, sigma);
            let iv = critical_interval(rating, pi, alpha).unwrap();
            let m = enclosed_mass(rating, pi, iv.half_width);
            prop_assert!(m >= 1.0 - alpha - 1e-12);
            prop_assert!(m <= 1.0 - alpha + 2e-3);
        }
    }
}

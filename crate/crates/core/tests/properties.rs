use std::collections::BTreeMap;

use hue_core::analytic::analytic_vs_mc_check;
use hue_core::compare::{error_probability, Pairing};
use hue_core::exec::{Chunked, Sequential};
use hue_core::metric::{sample_metric, MetricKind, PredictorSet, RatingDistributionSet};
use hue_core::noisy::fitted_ratings;
use hue_core::rng::sample_gaussian;
use hue_core::significance::{sample_srmse, SrmseMode};
use hue_core::synth::{nonzero_variance_fractions, synthesize_tensor, CalibrationProfile};
use hue_core::tensor::PairIndex;
use hue_core::uncertainty::{confidence_intervals, ParameterEstimate};
use hue_core::{dist::GaussianParams, RandomSeed};

#[test]
fn estimates_recover_latent_means() {
    let profile = CalibrationProfile::table1();
    let s = synthesize_tensor(&profile, 200, 5, RandomSeed::new(21)).unwrap();
    let estimates = s.tensor.estimate_parameters();
    let mut covered = 0;
    for (pair, est) in &estimates {
        let ci = confidence_intervals(est, 0.05).unwrap();
        let mu = s.latent[pair].mu;
        if ci.mu.0 <= mu && mu <= ci.mu.1 {
            covered += 1;
        }
    }
    let rate = covered as f64 / estimates.len() as f64;
    assert!(rate >= 0.90, "coverage {rate}");
}

#[test]
fn realized_fractions_follow_the_profile() {
    let profile = CalibrationProfile::table1();
    let users = 500;
    let s = synthesize_tensor(&profile, users, 5, RandomSeed::new(8)).unwrap();
    for (item, realized) in nonzero_variance_fractions(&s.tensor) {
        let target = profile.fractions[item as usize - 1];
        let sd = (target * (1.0 - target) / users as f64).sqrt();
        // noisy slices can still come out constant after rounding
        assert!(realized <= target + 3.0 * sd && realized >= target - 3.0 * sd - 0.05, "item {item}: {realized} vs {target}");
    }
}

#[test]
fn mean_interval_coverage_on_continuous_data() {
    let (reps, n) = (2000, 5);
    let truth = GaussianParams::new(3.0, 1.0).unwrap();
    let hits = (0..reps)
        .filter(|&r| {
            let xs = sample_gaussian(truth, n, RandomSeed::with_stream(77, r)).unwrap();
            let ci = confidence_intervals(&ParameterEstimate::from_values(&xs), 0.05).unwrap();
            ci.mu.0 <= 3.0 && 3.0 <= ci.mu.1
        })
        .count();
    let rate = hits as f64 / reps as f64;
    assert!((rate - 0.95).abs() <= 0.02, "{rate}");
}

#[test]
fn samples_do_not_depend_on_chunking() {
    let s = synthesize_tensor(&CalibrationProfile::table1(), 20, 5, RandomSeed::new(2)).unwrap();
    let ratings = fitted_ratings(&s.tensor).unwrap();
    let pi = ratings.mean_predictor("pi").map("pi", |_, v| v + 0.25);
    let seed = RandomSeed::new(4);
    for kind in [MetricKind::Rmse, MetricKind::Mae, MetricKind::Msd] {
        let a = sample_metric(&ratings, &pi, kind, 10_000, seed, &Sequential).unwrap();
        for size in [1, 7, 4096] {
            let b = sample_metric(&ratings, &pi, kind, 10_000, seed, &Chunked(size)).unwrap();
            assert_eq!(a.values, b.values);
        }
    }
    for mode in [SrmseMode::Conditional, SrmseMode::Filtered] {
        let a = sample_srmse(&ratings, &pi, 0.05, 5_000, seed, mode, &Sequential).unwrap();
        let b = sample_srmse(&ratings, &pi, 0.05, 5_000, seed, mode, &Chunked(333)).unwrap();
        assert_eq!(a.values, b.values);
    }
}

#[test]
fn analytic_model_matches_sampling() {
    for n in [1, 4, 30] {
        let r = analytic_vs_mc_check(n, 200_000, RandomSeed::new(n), &Chunked(10_000)).unwrap();
        assert!(r.within(4.0), "{r:?}");
        assert!(r.ks_distance < 0.01, "{r:?}");
    }
}

#[test]
fn worse_by_ten_sigma_is_never_ranked_first() {
    let ratings = RatingDistributionSet::standard(10).unwrap();
    let good = ratings.mean_predictor("good");
    let bad: PredictorSet = good.map("bad", |_, v| v + 10.0);
    let a = sample_metric(&ratings, &good, MetricKind::Rmse, 20_000, RandomSeed::new(1), &Sequential).unwrap();
    let b = sample_metric(&ratings, &bad, MetricKind::Rmse, 20_000, RandomSeed::new(2), &Sequential).unwrap();
    let r = error_probability(&a, &b, Pairing::Independent, 55).unwrap();
    assert!(r.p_error < 1e-3);
    assert!(r.overlap_a > 1.99);
}

#[test]
fn misaligned_predictors_name_the_pair() {
    let ratings = RatingDistributionSet::standard(3).unwrap();
    let mut entries: BTreeMap<PairIndex, f64> = ratings.mean_predictor("x").entries().clone();
    entries.remove(&PairIndex::new(0, 1));
    let partial = PredictorSet::new("x", entries).unwrap();
    let e = sample_metric(&ratings, &partial, MetricKind::Rmse, 10, RandomSeed::new(0), &Sequential).unwrap_err();
    assert!(e.to_string().contains("(0,1)"), "{e}");
}

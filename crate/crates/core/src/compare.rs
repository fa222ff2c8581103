//! Error probability of ranking two systems by their metric.

use alloc::vec::Vec;

use crate::density::{common_densities, overlap_area};
use crate::metric::MetricSample;
use crate::{Error, Result};

/// How trials of two samples are matched when counting `X₁ > X₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Pairing {
    /// All `τ²` combinations of independently drawn samples.
    #[default]
    Independent,
    /// Trial `j` against trial `j` (common random numbers).
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Better {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonResult {
    /// `A = ∫ |f₂ − f₁|`.
    pub overlap_a: f64,
    /// Probability that the system with the smaller mean scores worse.
    pub p_error: f64,
    pub better: Better,
    pub mean_first: f64,
    pub mean_second: f64,
    pub var_first: f64,
    pub var_second: f64,
    pub tau_used: usize,
    pub pairing: Pairing,
}

/// `P(X > Y)` with ties counted as one half.
pub fn prob_greater(x: &[f64], y: &[f64], pairing: Pairing) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::param("sample", "empty"));
    }
    match pairing {
        Pairing::Paired => {
            if x.len() != y.len() {
                return Err(Error::SizeMismatch { left: x.len(), right: y.len() });
            }
            let score: f64 = x
                .iter()
                .zip(y)
                .map(|(a, b)| if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 })
                .sum();
            Ok(score / x.len() as f64)
        }
        Pairing::Independent => {
            let mut ys: Vec<f64> = y.to_vec();
            ys.sort_by(f64::total_cmp);
            let mut xs: Vec<f64> = x.to_vec();
            xs.sort_by(f64::total_cmp);
            // merge walk: for each x, count y < x and y == x
            let (mut below, mut upto) = (0usize, 0usize);
            let mut twice = 0u128;
            for &v in &xs {
                while below < ys.len() && ys[below] < v {
                    below += 1;
                }
                upto = upto.max(below);
                while upto < ys.len() && ys[upto] <= v {
                    upto += 1;
                }
                twice += (2 * below + (upto - below)) as u128;
            }
            Ok(twice as f64 / (2.0 * xs.len() as f64 * ys.len() as f64))
        }
    }
}

/// Compare two metric samples of equal `τ`; lower metric values are better.
pub fn error_probability(
    first: &MetricSample,
    second: &MetricSample,
    pairing: Pairing,
    bins: usize,
) -> Result<ComparisonResult> {
    if first.tau() != second.tau() {
        return Err(Error::SizeMismatch { left: first.tau(), right: second.tau() });
    }
    let (m1, m2) = (first.mean(), second.mean());
    let better = if m1 <= m2 { Better::First } else { Better::Second };
    let p_error = match better {
        Better::First => prob_greater(&first.values, &second.values, pairing)?,
        Better::Second => prob_greater(&second.values, &first.values, pairing)?,
    };
    let d = common_densities(&[&first.values, &second.values], bins)?;
    Ok(ComparisonResult {
        overlap_a: overlap_area(&d[0], &d[1]),
        p_error,
        better,
        mean_first: m1,
        mean_second: m2,
        var_first: first.variance(),
        var_second: second.variance(),
        tau_used: first.tau(),
        pairing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricKind;
    use crate::rng::{sample_gaussian, RandomSeed};
    use crate::dist::GaussianParams;
    use alloc::vec;
    use proptest::prelude::*;

    fn sample(values: Vec<f64>) -> MetricSample {
        MetricSample { kind: MetricKind::Rmse, n: 1, seed: RandomSeed::new(0), values }
    }

    fn brute(x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for a in x {
            for b in y {
                s += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
            }
        }
        s / (x.len() * y.len()) as f64
    }

    #[test]
    fn identical_distributions_give_half() {
        let tau = 1_000_000;
        let a = sample_gaussian(GaussianParams::standard(), tau, RandomSeed::new(1)).unwrap();
        let b = sample_gaussian(GaussianParams::standard(), tau, RandomSeed::new(2)).unwrap();
        let r = error_probability(&sample(a.clone()), &sample(b), Pairing::Independent, 55).unwrap();
        assert!((r.p_error - 0.5).abs() < 0.01);
        let same = error_probability(&sample(a.clone()), &sample(a), Pairing::Paired, 55).unwrap();
        assert_eq!(same.p_error, 0.5);
        assert_eq!(same.overlap_a, 0.0);
    }

    #[test]
    fn separated_samples() {
        let tau = 100_000;
        let a = sample_gaussian(GaussianParams::standard(), tau, RandomSeed::new(3)).unwrap();
        let b: Vec<f64> = sample_gaussian(GaussianParams::standard(), tau, RandomSeed::new(4))
            .unwrap()
            .iter()
            .map(|x| x + 10.0)
            .collect();
        let r = error_probability(&sample(b), &sample(a), Pairing::Independent, 55).unwrap();
        assert_eq!(r.better, Better::Second);
        assert!(r.p_error < 0.001);
        assert!(r.overlap_a > 1.99);
    }

    #[test]
    fn unequal_tau_rejected() {
        let r = error_probability(&sample(vec![1.0, 2.0]), &sample(vec![1.0]), Pairing::Independent, 55);
        assert!(matches!(r, Err(Error::SizeMismatch { .. })));
    }

    proptest! {
        #[test]
        fn merge_walk_matches_brute_force(
            x in prop::collection::vec(0i32..20, 1..40),
            y in prop::collection::vec(0i32..20, 1..40),
        ) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            let fast = prob_greater(&x, &y, Pairing::Independent).unwrap();
            prop_assert!((fast - brute(&x, &y)).abs() < 1e-12);
        }

        #[test]
        fn shifting_second_up_never_raises_error(
            x in prop::collection::vec(-5.0f64..5.0, 2..50),
            shift in 0.0f64..3.0,
        ) {
            let mut y: Vec<f64> = x.iter().rev().map(|v| v * 0.9 + 0.2).collect();
            y.truncate(x.len());
            let before = prob_greater(&x, &y, Pairing::Paired).unwrap();
            let moved: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let after = prob_greater(&x, &moved, Pairing::Paired).unwrap();
            prop_assert!(after <= before);
            let before = prob_greater(&x, &y, Pairing::Independent).unwrap();
            let after = prob_greater(&x, &moved, Pairing::Independent).unwrap();
            prop_assert!(after <= before + 1e-12);
        }
    }
}

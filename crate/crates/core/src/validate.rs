//! Normality and cohort-stability tests for rating tensors.
//!
//! Every slice with nonzero variance is tested for normality with a KS test
//! against the Gaussian fitted to that slice. The naive p-value (parameters
//! treated as known) is reported next to a Lilliefors p-value from a
//! simulated null; decisions use the latter. Trial cohorts are compared
//! pairwise with Welch's t-test (drift of the mean) and the mean-centered
//! Levene test (change of spread).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::density::ks_distance_to;
use crate::dist::{FisherF, StudentT};
use crate::rng::{standard_normal, RandomSeed};
use crate::special::std_normal_cdf;
use crate::tensor::{PairIndex, RatingTensor};
use crate::{Error, Result};

/// `P(D_n < d)` for the one-sample KS statistic (Marsaglia–Tsang–Wang).
pub fn kolmogorov_cdf(n: usize, d: f64) -> f64 {
    if n == 0 || d <= 0.0 {
        return 0.0;
    }
    if d >= 1.0 {
        return 1.0;
    }
    let nf = n as f64;
    let k = (nf * d) as usize + 1;
    let m = 2 * k - 1;
    if m > 300 {
        return kolmogorov_asymptotic(n, d);
    }
    let h = k as f64 - nf * d;
    let mut hm = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i + 1 >= j {
                hm[i * m + j] = 1.0;
            }
        }
    }
    for i in 0..m {
        hm[i * m] -= h.powi(i as i32 + 1);
        hm[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        hm[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                for g in 1..=(i + 1 - j) {
                    hm[i * m + j] /= g as f64;
                }
            }
        }
    }
    let (q, mut e) = matrix_power(&hm, m, n);
    let mut s = q[(k - 1) * m + k - 1];
    for i in 1..=n {
        s = s * i as f64 / nf;
        if s < 1e-140 {
            s *= 1e140;
            e -= 140;
        }
    }
    (s * 10f64.powi(e)).clamp(0.0, 1.0)
}

fn matrix_mul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for l in 0..m {
            let x = a[i * m + l];
            if x != 0.0 {
                for j in 0..m {
                    c[i * m + j] += x * b[l * m + j];
                }
            }
        }
    }
    c
}

/// `A^n` with a decimal exponent kept aside against overflow.
fn matrix_power(a: &[f64], m: usize, n: usize) -> (Vec<f64>, i32) {
    if n == 1 {
        return (a.to_vec(), 0);
    }
    let (half, e_half) = matrix_power(a, m, n / 2);
    let mut v = matrix_mul(&half, &half, m);
    let mut e = 2 * e_half;
    if n % 2 == 1 {
        v = matrix_mul(a, &v, m);
    }
    if v[(m / 2) * m + m / 2] > 1e140 {
        for x in &mut v {
            *x *= 1e-140;
        }
        e += 140;
    }
    (v, e)
}

fn kolmogorov_asymptotic(n: usize, d: f64) -> f64 {
    let sn = (n as f64).sqrt();
    let x = (sn + 0.12 + 0.11 / sn) * d;
    let mut sum = 0.0;
    for j in 1..100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * x * x).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (1.0 - 2.0 * sum).clamp(0.0, 1.0)
}

/// KS statistic of `values` against the Gaussian with their own mean and
/// sample standard deviation. `None` for constant input.
pub fn fitted_ks_statistic(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    if !(sd > 0.0) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(ks_distance_to(&sorted, |x| std_normal_cdf((x - mean) / sd)))
}

/// Simulated null distribution of the fitted KS statistic, sorted.
pub fn lilliefors_null(n: usize, reps: usize, seed: RandomSeed) -> Vec<f64> {
    let mut streams = seed.trial_streams();
    let mut out: Vec<f64> = (0..reps)
        .filter_map(|j| {
            let rng = streams.at(j as u64);
            let xs: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
            fitted_ks_statistic(&xs)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

fn upper_tail_p(null: &[f64], d: f64) -> f64 {
    // ties are common for tiny n; count them as exceeding
    let below = null.partition_point(|&x| x < d - 1e-12);
    (1 + null.len() - below) as f64 / (null.len() + 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Two-sided Welch t-test; `None` when both samples are constant.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<Option<WelchResult>> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::param("sample", "need at least 2 values per group"));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se2 = va / na + vb / nb;
    if !(se2 > 0.0) {
        return Ok(None);
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    Ok(Some(WelchResult { t, df, p_value: StudentT::new(df)?.two_sided_p(t) }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LeveneResult {
    pub w: f64,
    pub df1: f64,
    pub df2: f64,
    pub p_value: f64,
}

/// Levene's test with mean centering; `None` when all absolute deviations
/// are equal within groups.
pub fn levene_test(groups: &[&[f64]]) -> Result<Option<LeveneResult>> {
    let k = groups.len();
    if k < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(Error::param("groups", "need at least 2 groups of at least 2 values"));
    }
    let z: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let m = g.iter().sum::<f64>() / g.len() as f64;
            g.iter().map(|x| (x - m).abs()).collect()
        })
        .collect();
    let big_n: usize = z.iter().map(Vec::len).sum();
    let grand = z.iter().flatten().sum::<f64>() / big_n as f64;
    let mut between = 0.0;
    let mut within = 0.0;
    for zi in &z {
        let mi = zi.iter().sum::<f64>() / zi.len() as f64;
        between += zi.len() as f64 * (mi - grand).powi(2);
        within += zi.iter().map(|x| (x - mi).powi(2)).sum::<f64>();
    }
    if !(within > 0.0) {
        return Ok(None);
    }
    let (df1, df2) = ((k - 1) as f64, (big_n - k) as f64);
    let w = (df2 / df1) * between / within;
    Ok(Some(LeveneResult { w, df1, df2, p_value: FisherF::new(df1, df2)?.sf(w) }))
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SliceTest {
    pub pair: PairIndex,
    pub n: usize,
    pub d: f64,
    pub p_naive: f64,
    pub p_lilliefors: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CohortTest {
    pub first: usize,
    pub second: usize,
    pub welch: Option<WelchResult>,
    pub welch_rejected: bool,
    pub levene: Option<LeveneResult>,
    pub levene_rejected: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ItemSummary {
    pub item: u32,
    pub slices: usize,
    pub nonzero_variance: usize,
    pub fraction_nonzero: f64,
    /// Among nonzero-variance slices, the fraction not rejected.
    pub fraction_not_rejected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub alpha: f64,
    pub slices: Vec<SliceTest>,
    pub zero_variance: usize,
    pub ks_tested: usize,
    pub ks_rejected: usize,
    /// Rejections under the naive KS p-value, for comparison.
    pub ks_rejected_naive: usize,
    pub items: Vec<ItemSummary>,
    pub cohorts: Vec<CohortTest>,
    /// Cohorts rejected by Welch in more than half of their comparisons.
    pub mean_shift_cohorts: Vec<usize>,
    /// Cohorts rejected by Levene in more than half of their comparisons.
    pub variance_shift_cohorts: Vec<usize>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn ks_rejection_rate(&self) -> Option<f64> {
        (self.ks_tested > 0).then(|| self.ks_rejected as f64 / self.ks_tested as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    pub alpha: f64,
    /// Simulated null samples per slice length.
    pub lilliefors_reps: usize,
    pub seed: RandomSeed,
}

impl ValidationConfig {
    pub fn new(alpha: f64, seed: RandomSeed) -> Self {
        Self { alpha, lilliefors_reps: 4000, seed }
    }
}

pub fn validate_tensor(tensor: &RatingTensor, config: &ValidationConfig) -> Result<ValidationReport> {
    let alpha = config.alpha;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", "must lie in (0, 1)"));
    }
    if config.lilliefors_reps == 0 {
        return Err(Error::param("lilliefors_reps", "need at least one"));
    }
    let mut notes = Vec::new();
    let mut nulls: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut slices = Vec::new();
    let mut zero_variance = 0;
    let mut per_item: BTreeMap<u32, (usize, usize, usize)> = BTreeMap::new();
    for (pair, values) in tensor.slices() {
        let item = per_item.entry(pair.item).or_default();
        item.0 += 1;
        let Some(d) = fitted_ks_statistic(values) else {
            zero_variance += 1;
            continue;
        };
        item.1 += 1;
        let n = values.len();
        let null = nulls
            .entry(n)
            .or_insert_with(|| lilliefors_null(n, config.lilliefors_reps, config.seed.derive(n as u64)));
        let p_lilliefors = upper_tail_p(null, d);
        let rejected = p_lilliefors < alpha;
        if !rejected {
            item.2 += 1;
        }
        slices.push(SliceTest {
            pair: *pair,
            n,
            d,
            p_naive: 1.0 - kolmogorov_cdf(n, d),
            p_lilliefors,
            rejected,
        });
    }
    let items = per_item
        .into_iter()
        .map(|(item, (n, nz, ok))| ItemSummary {
            item,
            slices: n,
            nonzero_variance: nz,
            fraction_nonzero: nz as f64 / n as f64,
            fraction_not_rejected: (nz > 0).then(|| ok as f64 / nz as f64),
        })
        .collect();

    let t_max = tensor.max_trials();
    let cohorts_values: Vec<Vec<f64>> = (0..t_max)
        .map(|t| tensor.slices().values().filter_map(|v| v.get(t).copied()).collect())
        .collect();
    let mut cohorts = Vec::new();
    let mut welch_hits = vec![(0usize, 0usize); t_max];
    let mut levene_hits = vec![(0usize, 0usize); t_max];
    if t_max < 2 {
        notes.push("fewer than 2 trials: cohort tests skipped".into());
    }
    for a in 0..t_max {
        for b in a + 1..t_max {
            let (x, y) = (&cohorts_values[a], &cohorts_values[b]);
            if x.len() < 2 || y.len() < 2 {
                notes.push(format!("cohorts {} and {}: too few ratings, skipped", a + 1, b + 1));
                continue;
            }
            let welch = welch_t_test(x, y)?;
            let levene = levene_test(&[x, y])?;
            if welch.is_none() {
                notes.push(format!("cohorts {} and {}: constant, Welch skipped", a + 1, b + 1));
            }
            if levene.is_none() {
                notes.push(format!("cohorts {} and {}: degenerate spread, Levene skipped", a + 1, b + 1));
            }
            let welch_rejected = welch.is_some_and(|w| w.p_value < alpha);
            let levene_rejected = levene.is_some_and(|l| l.p_value < alpha);
            for t in [a, b] {
                welch_hits[t].1 += usize::from(welch.is_some());
                welch_hits[t].0 += usize::from(welch_rejected);
                levene_hits[t].1 += usize::from(levene.is_some());
                levene_hits[t].0 += usize::from(levene_rejected);
            }
            cohorts.push(CohortTest { first: a + 1, second: b + 1, welch, welch_rejected, levene, levene_rejected });
        }
    }
    let flagged = |hits: &[(usize, usize)]| -> Vec<usize> {
        hits.iter()
            .enumerate()
            .filter(|(_, (r, n))| *n > 0 && 2 * r > *n)
            .map(|(t, _)| t + 1)
            .collect()
    };
    if !slices.is_empty() && slices[0].n <= 5 {
        notes.push("slices of 5 or fewer ratings: the KS test has little power".into());
    }
    Ok(ValidationReport {
        alpha,
        zero_variance,
        ks_tested: slices.len(),
        ks_rejected: slices.iter().filter(|s| s.rejected).count(),
        ks_rejected_naive: slices.iter().filter(|s| s.p_naive < alpha).count(),
        slices,
        items,
        mean_shift_cohorts: flagged(&welch_hits),
        variance_shift_cohorts: flagged(&levene_hits),
        cohorts,
        notes,
    })
}

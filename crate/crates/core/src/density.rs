//! Normalized histogram densities and distances between them.

use alloc::vec;
use alloc::vec::Vec;


use crate::metric::MetricSample;
use crate::{Error, Result};

/// Paper default for the number of histogram bins.
pub const DEFAULT_BINS: usize = 55;

/// Piecewise-constant density on `edges` with total area 1.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalDensity {
    pub edges: Vec<f64>,
    pub heights: Vec<f64>,
    /// Set when the sample was constant; the density is then a single
    /// narrow spike around that value.
    pub degenerate: bool,
}

impl EmpiricalDensity {
    pub fn bins(&self) -> usize {
        self.heights.len()
    }

    pub fn area(&self) -> f64 {
        self.heights
            .iter()
            .zip(self.edges.windows(2))
            .map(|(h, e)| h * (e[1] - e[0]))
            .sum()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.edges.len() - 1])
    }

    /// Density at `x`; bins are half open except the last.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        let i = self.edges.partition_point(|&e| e <= x);
        self.heights[i.clamp(1, self.heights.len()) - 1]
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1]))
    }

    /// Histogram of `values` on `edges`. Values outside the edges are
    /// counted in the nearest end bin so the area stays 1.
    pub fn on_edges(values: &[f64], edges: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("sample", "empty"));
        }
        if edges.len() < 2 || edges.windows(2).any(|e| !(e[1] > e[0])) {
            return Err(Error::param("edges", "need at least two strictly increasing edges"));
        }
        let bins = edges.len() - 1;
        let mut counts = vec![0usize; bins];
        for &x in values {
            let i = edges.partition_point(|&e| e <= x).clamp(1, bins);
            counts[i - 1] += 1;
        }
        let total = values.len() as f64;
        let heights = counts
            .iter()
            .zip(edges.windows(2))
            .map(|(&c, e)| c as f64 / (total * (e[1] - e[0])))
            .collect();
        Ok(Self { edges: edges.to_vec(), heights, degenerate: false })
    }

    /// Uniform-bin histogram over `[min, max]` of `values`.
    pub fn from_values(values: &[f64], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::param("bins", "need at least 2"));
        }
        let (lo, hi) = min_max(values)?;
        if lo == hi {
            return Ok(spike(lo));
        }
        Self::on_edges(values, &uniform_edges(lo, hi, bins))
    }
}

fn spike(x: f64) -> EmpiricalDensity {
    let half = (x.abs() * 1e-9).max(1e-12);
    let (lo, hi) = (x - half, x + half);
    EmpiricalDensity {
        edges: vec![lo, hi],
        heights: vec![1.0 / (hi - lo)],
        degenerate: true,
    }
}

fn min_max(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::param("sample", "empty"));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite value in sample"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + w * i as f64).collect();
    edges[bins] = hi;
    edges
}

pub fn estimate_density(sample: &MetricSample, bins: usize) -> Result<EmpiricalDensity> {
    EmpiricalDensity::from_values(&sample.values, bins)
}

/// Histograms of several samples on one shared uniform grid spanning all of
/// them. A common grid keeps bin-alignment artifacts out of overlap measures.
pub fn common_densities(samples: &[&[f64]], bins: usize) -> Result<Vec<EmpiricalDensity>> {
    if bins < 2 {
        return Err(Error::param("bins", "need at least 2"));
    }
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in samples {
        let (a, b) = min_max(s)?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if lo == hi {
        return Ok(samples.iter().map(|_| spike(lo)).collect());
    }
    let edges = uniform_edges(lo, hi, bins);
    samples
        .iter()
        .map(|s| {
            let mut d = EmpiricalDensity::on_edges(s, &edges)?;
            d.degenerate = s.iter().all(|&x| x == s[0]);
            Ok(d)
        })
        .collect()
}

/// Walk the merged grid of two densities, calling `f(h1, h2, width)`.
fn merged(f1: &EmpiricalDensity, f2: &EmpiricalDensity, mut f: impl FnMut(f64, f64, f64)) {
    let mut grid: Vec<f64> = f1.edges.iter().chain(&f2.edges).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    for w in grid.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        f(f1.eval(mid), f2.eval(mid), w[1] - w[0]);
    }
}

/// `A = ∫ |f₂ − f₁| dx`, in `[0, 2]`.
pub fn overlap_area(f1: &EmpiricalDensity, f2: &EmpiricalDensity) -> f64 {
    let mut a = 0.0;
    merged(f1, f2, |h1, h2, w| a += (h1 - h2).abs() * w);
    a.clamp(0.0, 2.0)
}

/// Shared mass `∫ min(f₁, f₂) dx = 1 − A/2`, in `[0, 1]`.
pub fn intersection_area(f1: &EmpiricalDensity, f2: &EmpiricalDensity) -> f64 {
    let mut a = 0.0;
    merged(f1, f2, |h1, h2, w| a += h1.min(h2) * w);
    a.clamp(0.0, 1.0)
}

/// `sup |F_n − F|` for sorted `values` against a continuous `cdf`.
pub fn ks_distance_to(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Two-sample KS statistic for sorted inputs.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{GaussianParams, NakagamiParams};
    use crate::rng::{sample_gaussian, RandomSeed};
    use rand::Rng;

    fn uniform(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RandomSeed::new(seed).rng();
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn flat_histogram_and_normalization() {
        let xs = uniform(200_000, 1);
        let d = EmpiricalDensity::from_values(&xs, 10).unwrap();
        assert!((d.area() - 1.0).abs() < 1e-9);
        for h in &d.heights {
            assert!((h - 1.0).abs() < 0.03, "{h}");
        }
        let d2 = EmpiricalDensity::from_values(&xs, 20).unwrap();
        assert!((d.area() - d2.area()).abs() < 1e-9);
        assert!(EmpiricalDensity::from_values(&xs, 1).is_err());
    }

    #[test]
    fn constant_sample_is_spike() {
        let d = EmpiricalDensity::from_values(&[2.5; 10], 55).unwrap();
        assert!(d.degenerate);
        assert!((d.area() - 1.0).abs() < 1e-9);
        assert!(d.edges[0] < 2.5 && d.edges[1] > 2.5);
    }

    #[test]
    fn overlap_bounds() {
        let a = EmpiricalDensity::from_values(&uniform(10_000, 2), 10).unwrap();
        assert_eq!(overlap_area(&a, &a), 0.0);
        assert_eq!(intersection_area(&a, &a), 1.0);
        let shifted: Vec<f64> = uniform(10_000, 3).iter().map(|x| x + 5.0).collect();
        let b = EmpiricalDensity::from_values(&shifted, 10).unwrap();
        assert!((overlap_area(&a, &b) - 2.0).abs() < 1e-9);
        assert!(intersection_area(&a, &b).abs() < 1e-9);
    }

    #[test]
    fn gaussian_overlap_matches_closed_form() {
        let n = 1_000_000;
        let a = sample_gaussian(GaussianParams::standard(), n, RandomSeed::new(10)).unwrap();
        let b = sample_gaussian(GaussianParams::new(1.0, 1.0).unwrap(), n, RandomSeed::new(11)).unwrap();
        let d = common_densities(&[&a, &b], DEFAULT_BINS).unwrap();
        let expected = 2.0 * (1.0 - 2.0 * crate::special::std_normal_cdf(-0.5));
        assert!((overlap_area(&d[0], &d[1]) - expected).abs() < 0.02);
        assert!((intersection_area(&d[0], &d[1]) - (1.0 - expected / 2.0)).abs() < 0.01);
    }

    #[test]
    fn nakagami_histogram_tracks_pdf() {
        // √(χ²(5)/5) is Nakagami(2.5, 1)
        let n = 1_000_000;
        let mut rng = RandomSeed::new(12).rng();
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let s: f64 = (0..5).map(|_| crate::rng::standard_normal(&mut rng).powi(2)).sum();
                (s / 5.0).sqrt()
            })
            .collect();
        let d = EmpiricalDensity::from_values(&xs, DEFAULT_BINS).unwrap();
        let model = NakagamiParams::new(2.5, 1.0).unwrap();
        let gap = d
            .centers()
            .zip(&d.heights)
            .map(|(c, h)| (h - model.pdf(c)).abs())
            .fold(0.0, f64::max);
        assert!(gap < 0.05, "{gap}");
        let mut sorted = xs;
        sorted.sort_by(f64::total_cmp);
        assert!(ks_distance_to(&sorted, |x| model.cdf(x)) < 0.005);
    }

    #[test]
    fn two_sample_ks() {
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0];
        assert_eq!(ks_distance(&a, &b), 1.0);
        assert_eq!(ks_distance(&a, &a), 0.0);
    }
}

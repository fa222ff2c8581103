//! Distributions used by the rating model and its metrics.
//!
//! Only what the evaluation needs: Gaussian, Nakagami, gamma, χ², Student t
//! and Fisher F. Quantiles of t and χ² are obtained by inverting the CDF.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::special::{
    beta_reg, gamma_half_ratio_scaled, gamma_p, gamma_q, ln_gamma, std_normal_cdf,
    std_normal_pdf, std_normal_quantile,
};
use crate::{Error, Result};

/// Parameters of a rating distribution `N(μ, σ)`.
///
/// `sigma == 0` is a constant rater: valid data, not a continuous density.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianParams {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::param("mu", "must be finite"));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::param("sigma", "must be finite and non-negative"));
        }
        Ok(Self { mu, sigma })
    }

    pub fn standard() -> Self {
        Self { mu: 0.0, sigma: 1.0 }
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma == 0.0
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if self.is_degenerate() {
            return Err(Error::Degenerate("density of a zero-variance Gaussian"));
        }
        Ok(std_normal_pdf((x - self.mu) / self.sigma) / self.sigma)
    }

    /// CDF; a step function when `sigma == 0`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            return if x < self.mu { 0.0 } else { 1.0 };
        }
        std_normal_cdf((x - self.mu) / self.sigma)
    }

    /// `P(X > x)` without cancellation in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            return if x < self.mu { 1.0 } else { 0.0 };
        }
        std_normal_cdf((self.mu - x) / self.sigma)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_open_probability(p)?;
        if self.is_degenerate() {
            return Err(Error::Degenerate("quantile of a zero-variance Gaussian"));
        }
        Ok(self.mu + self.sigma * std_normal_quantile(p))
    }
}

/// Parameters of a Nakagami distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NakagamiParams {
    pub m: f64,
    pub omega: f64,
}

impl NakagamiParams {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::param("m", "shape must be positive"));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::param("omega", "spread must be positive"));
        }
        Ok(Self { m, omega })
    }

    /// `f(x) = 2 m^m / (Γ(m) Ω^m) · x^{2m-1} · exp(-m x² / Ω)`; zero for `x < 0`.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let NakagamiParams { m, omega } = *self;
        if x == 0.0 {
            return match m {
                m if m < 0.5 => f64::INFINITY,
                m if m == 0.5 => (2.0 / (core::f64::consts::PI * omega)).sqrt(),
                _ => 0.0,
            };
        }
        let ln = core::f64::consts::LN_2 + m * (m / omega).ln() - ln_gamma(m)
            + (2.0 * m - 1.0) * x.ln()
            - m * x * x / omega;
        ln.exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        gamma_p(self.m, self.m * x * x / self.omega)
    }

    pub fn mean(&self) -> f64 {
        // Γ(m + ½) / Γ(m) · √(Ω/m)
        gamma_half_ratio_scaled(self.m) * self.omega.sqrt()
    }

    pub fn variance(&self) -> f64 {
        let r = gamma_half_ratio_scaled(self.m);
        self.omega * (1.0 - r * r)
    }
}

/// Gamma distribution with shape `k` and scale `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaDist {
    pub shape: f64,
    pub scale: f64,
}

impl GammaDist {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0) || !(scale > 0.0) {
            return Err(Error::param("shape/scale", "must be positive"));
        }
        Ok(Self { shape, scale })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let k = self.shape;
        ((k - 1.0) * x.ln() - x / self.scale - ln_gamma(k) - k * self.scale.ln()).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        gamma_p(self.shape, x / self.scale)
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }
}

/// χ² distribution with `k` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquared {
    pub dof: f64,
}

impl ChiSquared {
    pub fn new(dof: f64) -> Result<Self> {
        if !(dof > 0.0) || !dof.is_finite() {
            return Err(Error::param("dof", "must be positive"));
        }
        Ok(Self { dof })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        GammaDist {
            shape: self.dof / 2.0,
            scale: 2.0,
        }
        .pdf(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        gamma_p(self.dof / 2.0, x / 2.0)
    }

    pub fn sf(&self, x: f64) -> f64 {
        gamma_q(self.dof / 2.0, x / 2.0)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_open_probability(p)?;
        let k = self.dof;
        let mut hi = k + 10.0 * (2.0 * k).sqrt() + 10.0;
        while self.cdf(hi) < p {
            hi *= 2.0;
        }
        Ok(invert_increasing(|x| self.cdf(x), p, 0.0, hi))
    }
}

/// Student t distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentT {
    pub dof: f64,
}

impl StudentT {
    pub fn new(dof: f64) -> Result<Self> {
        if !(dof > 0.0) || dof.is_nan() {
            return Err(Error::param("dof", "must be positive"));
        }
        Ok(Self { dof })
    }

    pub fn pdf(&self, t: f64) -> f64 {
        let k = self.dof;
        let ln = ln_gamma((k + 1.0) / 2.0)
            - ln_gamma(k / 2.0)
            - 0.5 * (k * core::f64::consts::PI).ln()
            - (k + 1.0) / 2.0 * (t * t / k).ln_1p();
        ln.exp()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.5;
        }
        let k = self.dof;
        let tail = 0.5 * beta_reg(k / 2.0, 0.5, k / (k + t * t));
        if t > 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }

    /// Two-sided tail probability `P(|T| ≥ |t|)`.
    pub fn two_sided_p(&self, t: f64) -> f64 {
        let k = self.dof;
        beta_reg(k / 2.0, 0.5, k / (k + t * t)).min(1.0)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_open_probability(p)?;
        if p == 0.5 {
            return Ok(0.0);
        }
        if p < 0.5 {
            return self.quantile(1.0 - p).map(|q| -q);
        }
        let mut hi = 1.0;
        while self.cdf(hi) < p {
            hi *= 2.0;
        }
        Ok(invert_increasing(|x| self.cdf(x), p, 0.0, hi))
    }
}

/// Fisher–Snedecor F distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherF {
    pub d1: f64,
    pub d2: f64,
}

impl FisherF {
    pub fn new(d1: f64, d2: f64) -> Result<Self> {
        if !(d1 > 0.0) || !(d2 > 0.0) {
            return Err(Error::param("dof", "must be positive"));
        }
        Ok(Self { d1, d2 })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        beta_reg(self.d1 / 2.0, self.d2 / 2.0, self.d1 * x / (self.d1 * x + self.d2))
    }

    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        beta_reg(self.d2 / 2.0, self.d1 / 2.0, self.d2 / (self.d2 + self.d1 * x))
    }
}

fn check_open_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::param("p", "probability must lie in (0, 1)"))
    }
}

/// Bisection on a nondecreasing `cdf`, to 1e-13 relative in `x`.
fn invert_increasing(cdf: impl Fn(f64) -> f64, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn gaussian_pdf(params: GaussianParams, x: f64) -> Result<f64> {
    params.pdf(x)
}

pub fn gaussian_cdf(params: GaussianParams, x: f64) -> f64 {
    params.cdf(x)
}

pub fn gaussian_quantile(params: GaussianParams, p: f64) -> Result<f64> {
    params.quantile(p)
}

pub fn nakagami_pdf(params: NakagamiParams, x: f64) -> f64 {
    params.pdf(x)
}

/// Mean and variance of `√(χ²(n)/n)`, i.e. of Nakagami(n/2, 1).
pub fn nakagami_mean_var(n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let r = gamma_half_ratio_scaled(n as f64 / 2.0);
    Ok((r, 1.0 - r * r))
}

/// `p`-quantile of Student's t with `k` degrees of freedom.
pub fn quantile_t(p: f64, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k", "degrees of freedom must be at least 1"));
    }
    StudentT::new(k as f64)?.quantile(p)
}

/// `p`-quantile of χ² with `k` degrees of freedom.
pub fn quantile_chi2(p: f64, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k", "degrees of freedom must be at least 1"));
    }
    ChiSquared::new(k as f64)?.quantile(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn gaussian_examples() {
        let std = GaussianParams::standard();
        assert_eq!(std.cdf(0.0), 0.5);
        // frozen from a 50-digit erfinv evaluation
        assert!((std.quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        let g = GaussianParams::new(3.0, 0.5).unwrap();
        let expected = 1.0 / (0.5 * (2.0 * core::f64::consts::PI).sqrt());
        assert!((g.pdf(3.0).unwrap() - expected).abs() < 1e-15);
        assert!((g.pdf(3.0).unwrap() - 0.797_884_560_802_865_4).abs() < 1e-12);
    }

    #[test]
    fn gaussian_rejects_bad_input() {
        let flat = GaussianParams::new(2.0, 0.0).unwrap();
        assert!(flat.pdf(2.0).is_err());
        assert!(flat.quantile(0.5).is_err());
        assert!(GaussianParams::standard().quantile(1.0).is_err());
        assert!(GaussianParams::standard().quantile(0.0).is_err());
        assert!(GaussianParams::new(0.0, -1.0).is_err());
    }

    #[test]
    fn nakagami_half_normal_case() {
        let nk = NakagamiParams::new(0.5, 1.0).unwrap();
        let x = 0.7979;
        let half_normal = 2.0 * std_normal_pdf(x);
        assert!((nk.pdf(x) - half_normal).abs() < 1e-14);
        assert_eq!(nk.pdf(-1.0), 0.0);
    }

    #[test]
    fn nakagami_normalizes() {
        for &m in &[0.5, 1.0, 2.5, 12.5, 50.0] {
            let nk = NakagamiParams::new(m, 1.0).unwrap();
            // substitute x = u² to tame the x^{-1/2} singularity at m = 0.5
            let total = simpson(|u| 2.0 * u * nk.pdf(u * u), 0.0, 10f64.sqrt(), 20_000);
            assert!((total - 1.0).abs() < 1e-6, "m={m} total={total}");
        }
    }

    #[test]
    fn nakagami_cdf_matches_integral() {
        let nk = NakagamiParams::new(2.5, 1.0).unwrap();
        let integral = simpson(|x| nk.pdf(x), 0.0, 1.1, 4000);
        assert!((nk.cdf(1.1) - integral).abs() < 1e-10);
    }

    #[test]
    fn nakagami_moments_examples() {
        let (m1, _) = nakagami_mean_var(1).unwrap();
        assert!((m1 - (2.0 / core::f64::consts::PI).sqrt()).abs() < 1e-14);
        let (m2, _) = nakagami_mean_var(2).unwrap();
        assert!((m2 - core::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
        assert!(nakagami_mean_var(0).is_err());
        let (m, v) = nakagami_mean_var(1_000_000).unwrap();
        assert!((1.0 - m) < 1e-6 && v < 1e-6 && v > 0.0);
    }

    #[test]
    fn nakagami_moments_monotone() {
        let mut prev = nakagami_mean_var(1).unwrap();
        for n in 2..=10_000 {
            let cur = nakagami_mean_var(n).unwrap();
            assert!(cur.0 > prev.0 && cur.0 <= 1.0, "mean not increasing at n={n}");
            assert!(cur.1 < prev.1 && cur.1 >= 0.0, "variance not decreasing at n={n}");
            prev = cur;
        }
    }

    #[test]
    fn t_quantiles() {
        assert!((quantile_t(0.975, 4).unwrap() - 2.776_445_105_197_799).abs() < 1e-9);
        assert_eq!(quantile_t(0.5, 7).unwrap(), 0.0);
        assert!((quantile_t(0.975, 1_000_000).unwrap() - 1.959_966_356_814_106_6).abs() < 1e-9);
        for &p in &[0.001, 0.1, 0.3, 0.45] {
            for &k in &[1, 3, 30] {
                let a = quantile_t(p, k).unwrap();
                let b = quantile_t(1.0 - p, k).unwrap();
                assert!((a + b).abs() < 1e-10);
            }
        }
        assert!(quantile_t(1.2, 3).is_err());
        assert!(quantile_t(0.5, 0).is_err());
    }

    #[test]
    fn chi2_quantiles() {
        assert!((quantile_chi2(0.975, 4).unwrap() - 11.143_286_781_877_79).abs() < 1e-8);
        assert!((quantile_chi2(0.025, 4).unwrap() - 0.484_418_557_087_930_5).abs() < 1e-9);
        // Wilson–Hilferty: median ≈ k (1 - 2/(9k))³
        for &k in &[50u64, 500, 5000] {
            let kf = k as f64;
            let wh = kf * (1.0 - 2.0 / (9.0 * kf)).powi(3);
            assert!((quantile_chi2(0.5, k).unwrap() - wh).abs() < 0.01);
            assert!((quantile_chi2(0.5, k).unwrap() - (kf - 2.0 / 3.0)).abs() < 0.02);
        }
        assert!(quantile_chi2(0.0, 4).is_err());
    }

    #[test]
    fn quantile_cdf_roundtrip() {
        let t = StudentT::new(6.0).unwrap();
        let c = ChiSquared::new(9.0).unwrap();
        let g = GaussianParams::new(1.0, 2.0).unwrap();
        for i in 1..=999 {
            let p = 0.001 * i as f64;
            assert!((t.cdf(t.quantile(p).unwrap()) - p).abs() < 1e-8);
            assert!((c.cdf(c.quantile(p).unwrap()) - p).abs() < 1e-8);
            assert!((g.cdf(g.quantile(p).unwrap()) - p).abs() < 1e-8);
        }
    }

    #[test]
    fn densities_normalize() {
        let t = StudentT::new(3.0).unwrap();
        let c = ChiSquared::new(4.0).unwrap();
        let g = GaussianParams::new(0.0, 1.0).unwrap();
        assert!((simpson(|x| t.pdf(x), -2000.0, 2000.0, 2_000_000) - 1.0).abs() < 1e-6);
        assert!((simpson(|x| c.pdf(x), 0.0, 200.0, 200_000) - 1.0).abs() < 1e-6);
        assert!((simpson(|x| g.pdf(x).unwrap(), -12.0, 12.0, 20_000) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn f_distribution_tails() {
        let f = FisherF::new(1.0, 30.0).unwrap();
        // F(1, k) = t(k)²
        let t = StudentT::new(30.0).unwrap();
        let x = 4.2f64;
        assert!((f.sf(x) - t.two_sided_p(x.sqrt())).abs() < 1e-12);
        assert!((f.cdf(x) + f.sf(x) - 1.0).abs() < 1e-12);
    }
}

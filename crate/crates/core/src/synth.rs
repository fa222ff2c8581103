//! Synthetic rating tensors calibrated to per-item fractions of noisy slices.
//!
//! Each pair gets a latent mean `μ ~ U[μ_lo, μ_hi]`. With probability equal
//! to its item's fraction the slice is noisy: `σ ~ U[σ_lo, σ_hi]` and `T`
//! Gaussian draws are rounded onto the scale, redrawn until they are not all
//! equal. Otherwise the user repeats `round(μ)` every time.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::dist::GaussianParams;
use crate::rng::{standard_normal, RandomSeed};
use crate::tensor::{PairIndex, RatingTensor, Scale};
use crate::{Error, Result};

/// Fractions of nonzero-variance slices per item in the reference study.
pub const TABLE1_FRACTIONS: [f64; 5] = [0.90, 0.60, 0.50, 0.69, 0.51];

const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationProfile {
    /// Per item, the probability that a user's slice has nonzero variance.
    pub fractions: Vec<f64>,
    pub scale: Scale,
    pub mu_range: (f64, f64),
    pub sigma_range: (f64, f64),
}

impl CalibrationProfile {
    pub fn table1() -> Self {
        Self {
            fractions: TABLE1_FRACTIONS.to_vec(),
            scale: Scale::likert5(),
            mu_range: (1.5, 4.5),
            sigma_range: (0.3, 1.2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::param("fractions", "need at least one item"));
        }
        if self.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::param("fractions", "must lie in [0, 1]"));
        }
        let (a, b) = self.mu_range;
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::param("mu_range", "need finite lo <= hi"));
        }
        let (a, b) = self.sigma_range;
        if !(a > 0.0 && b.is_finite() && a <= b) {
            return Err(Error::param("sigma_range", "need 0 < lo <= hi"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTensor {
    pub tensor: RatingTensor,
    /// Latent distribution per pair; `σ = 0` for constant slices.
    pub latent: BTreeMap<PairIndex, GaussianParams>,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Users are numbered `1..=users`, items `1..=fractions.len()`.
pub fn synthesize_tensor(profile: &CalibrationProfile, users: u32, trials: usize, seed: RandomSeed) -> Result<SyntheticTensor> {
    profile.validate()?;
    if users == 0 || trials == 0 {
        return Err(Error::param("dims", "need at least one user and one trial"));
    }
    if trials < 2 && profile.fractions.iter().any(|&f| f > 0.0) {
        return Err(Error::param("trials", "noisy slices need at least 2 trials"));
    }
    let scale = profile.scale;
    let items = profile.fractions.len() as u32;
    let mut streams = seed.trial_streams();
    let mut slices = BTreeMap::new();
    let mut latent = BTreeMap::new();
    for user in 1..=users {
        for item in 1..=items {
            let pair = PairIndex::new(user, item);
            let rng = streams.at(u64::from(user - 1) * u64::from(items) + u64::from(item - 1));
            let mu = uniform(rng, profile.mu_range);
            let noisy = rng.random::<f64>() < profile.fractions[item as usize - 1];
            let (values, params) = if noisy {
                let sigma = uniform(rng, profile.sigma_range);
                let mut draws = 0;
                loop {
                    let values: Vec<f64> = (0..trials).map(|_| scale.snap(mu + sigma * standard_normal(rng))).collect();
                    if values.iter().any(|&x| x != values[0]) {
                        break (values, GaussianParams::new(mu, sigma)?);
                    }
                    draws += 1;
                    if draws == MAX_REDRAWS {
                        return Err(Error::Numerical("could not draw a non-constant slice"));
                    }
                }
            } else {
                let value = scale.snap(mu);
                (alloc::vec![value; trials], GaussianParams::new(value, 0.0)?)
            };
            slices.insert(pair, values);
            latent.insert(pair, params);
        }
    }
    Ok(SyntheticTensor { tensor: RatingTensor::from_slices(slices, Some(scale))?, latent })
}

/// Continuous Gaussian ratings without rounding, `σ ~ U[σ_lo, σ_hi]` for
/// every pair.
pub fn synthesize_gaussian(profile: &CalibrationProfile, users: u32, trials: usize, seed: RandomSeed) -> Result<SyntheticTensor> {
    profile.validate()?;
    if users == 0 || trials < 2 {
        return Err(Error::param("dims", "need at least one user and two trials"));
    }
    let items = profile.fractions.len() as u32;
    let mut streams = seed.trial_streams();
    let mut slices = BTreeMap::new();
    let mut latent = BTreeMap::new();
    for user in 1..=users {
        for item in 1..=items {
            let rng = streams.at(u64::from(user - 1) * u64::from(items) + u64::from(item - 1));
            let mu = uniform(rng, profile.mu_range);
            let sigma = uniform(rng, profile.sigma_range);
            let values = (0..trials).map(|_| mu + sigma * standard_normal(rng)).collect();
            slices.insert(PairIndex::new(user, item), values);
            latent.insert(PairIndex::new(user, item), GaussianParams::new(mu, sigma)?);
        }
    }
    Ok(SyntheticTensor { tensor: RatingTensor::from_slices(slices, None)?, latent })
}

/// Add `shift` to every rating of trial `trial` (1-based). The result has no
/// scale metadata since shifted ratings may leave the scale.
pub fn with_trial_shift(tensor: &RatingTensor, trial: usize, shift: f64) -> Result<RatingTensor> {
    if trial == 0 {
        return Err(Error::param("trial", "trials count from 1"));
    }
    let slices = tensor
        .slices()
        .iter()
        .map(|(p, v)| {
            let mut v = v.clone();
            if let Some(x) = v.get_mut(trial - 1) {
                *x += shift;
            }
            (*p, v)
        })
        .collect();
    RatingTensor::from_slices(slices, None)
}

/// Per item, the fraction of slices whose ratings are not all equal.
pub fn nonzero_variance_fractions(tensor: &RatingTensor) -> BTreeMap<u32, f64> {
    let mut counts: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (pair, values) in tensor.slices() {
        let c = counts.entry(pair.item).or_default();
        c.0 += 1;
        if values.iter().any(|&x| x != values[0]) {
            c.1 += 1;
        }
    }
    counts.into_iter().map(|(item, (n, k))| (item, k as f64 / n as f64)).collect()
}

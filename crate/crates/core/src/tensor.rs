//! Rating tensors `R_{u,i,t}` and their per-pair slices.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::uncertainty::ParameterEstimate;
use crate::{Error, Result};

/// Pair index `ν = (user, item)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairIndex {
    pub user: u32,
    pub item: u32,
}

impl PairIndex {
    pub const fn new(user: u32, item: u32) -> Self {
        Self { user, item }
    }
}

impl fmt::Display for PairIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.user, self.item)
    }
}

/// Rating scale metadata, e.g. 1..5 in steps of 1.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scale {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Scale {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::param("scale", "need finite min < max"));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::param("scale", "step must be positive"));
        }
        Ok(Self { min, max, step })
    }

    pub fn likert5() -> Self {
        Self { min: 1.0, max: 5.0, step: 1.0 }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    /// Round to the nearest scale point and clamp into range.
    pub fn snap(&self, x: f64) -> f64 {
        let k = libm::round((x - self.min) / self.step);
        (self.min + k * self.step).clamp(self.min, self.max)
    }
}

/// One observed rating; `trial` counts from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observation {
    pub user: u32,
    pub item: u32,
    pub trial: u32,
    pub rating: f64,
}

/// Re-rating observations grouped into slices `R_{u,i}` over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTensor {
    slices: BTreeMap<PairIndex, Vec<f64>>,
    scale: Option<Scale>,
}

/// Per-pair parameter estimates.
pub type ParameterTable = BTreeMap<PairIndex, ParameterEstimate>;

impl RatingTensor {
    /// Build from raw observations. Duplicate `(u,i,t)` keys, gaps in the
    /// trial sequence and out-of-scale ratings are rejected.
    pub fn from_observations<I>(observations: I, scale: Option<Scale>) -> Result<Self>
    where
        I: IntoIterator<Item = Observation>,
    {
        let mut raw: BTreeMap<PairIndex, BTreeMap<u32, f64>> = BTreeMap::new();
        for obs in observations {
            if !obs.rating.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite rating at ({},{},{})",
                    obs.user, obs.item, obs.trial
                )));
            }
            if obs.trial == 0 {
                return Err(Error::Data(format!(
                    "trial index 0 at ({},{}); trials count from 1",
                    obs.user, obs.item
                )));
            }
            let slot = raw.entry(PairIndex::new(obs.user, obs.item)).or_default();
            if slot.insert(obs.trial, obs.rating).is_some() {
                return Err(Error::Data(format!(
                    "duplicate observation ({},{},{})",
                    obs.user, obs.item, obs.trial
                )));
            }
        }
        let mut slices = BTreeMap::new();
        for (pair, trials) in raw {
            for (expected, &t) in (1u32..).zip(trials.keys()) {
                if t != expected {
                    return Err(Error::Data(format!(
                        "pair {pair}: trial {expected} missing (trials must be contiguous from 1)"
                    )));
                }
            }
            slices.insert(pair, trials.into_values().collect());
        }
        Self::from_slices(slices, scale)
    }

    pub fn from_slices(slices: BTreeMap<PairIndex, Vec<f64>>, scale: Option<Scale>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::Data("tensor has no observations".into()));
        }
        for (pair, values) in &slices {
            if values.is_empty() {
                return Err(Error::Data(format!("pair {pair}: empty slice")));
            }
            if let Some(scale) = scale {
                if let Some(x) = values.iter().find(|x| !scale.contains(**x)) {
                    return Err(Error::Data(format!(
                        "pair {pair}: rating {x} outside scale [{}, {}]",
                        scale.min, scale.max
                    )));
                }
            }
        }
        Ok(Self { slices, scale })
    }

    pub fn scale(&self) -> Option<Scale> {
        self.scale
    }

    pub fn slices(&self) -> &BTreeMap<PairIndex, Vec<f64>> {
        &self.slices
    }

    pub fn slice(&self, pair: PairIndex) -> Option<&[f64]> {
        self.slices.get(&pair).map(Vec::as_slice)
    }

    pub fn pairs(&self) -> impl Iterator<Item = PairIndex> + '_ {
        self.slices.keys().copied()
    }

    /// Number of pairs `ν`.
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Total number of ratings.
    pub fn observation_count(&self) -> usize {
        self.slices.values().map(Vec::len).sum()
    }

    /// `(U, I, T)`: distinct users, distinct items and the longest slice.
    pub fn dims(&self) -> (usize, usize, usize) {
        let mut users: Vec<u32> = self.slices.keys().map(|p| p.user).collect();
        users.sort_unstable();
        users.dedup();
        let mut items: Vec<u32> = self.slices.keys().map(|p| p.item).collect();
        items.sort_unstable();
        items.dedup();
        (users.len(), items.len(), self.max_trials())
    }

    pub fn max_trials(&self) -> usize {
        self.slices.values().map(Vec::len).max().unwrap_or(0)
    }

    pub fn min_trials(&self) -> usize {
        self.slices.values().map(Vec::len).min().unwrap_or(0)
    }

    /// Observations in `(user, item, trial)` order.
    pub fn observations(&self) -> impl Iterator<Item = Observation> + '_ {
        self.slices.iter().flat_map(|(pair, values)| {
            values.iter().enumerate().map(move |(t, &rating)| Observation {
                user: pair.user,
                item: pair.item,
                trial: t as u32 + 1,
                rating,
            })
        })
    }

    /// Sample mean and Bessel-corrected standard deviation per slice.
    pub fn estimate_parameters(&self) -> ParameterTable {
        self.slices
            .iter()
            .map(|(pair, values)| (*pair, ParameterEstimate::from_values(values)))
            .collect()
    }

    /// Ratings of trial `t` (1-based) for every pair that has it.
    pub fn trial_column(&self, t: usize) -> Result<BTreeMap<PairIndex, f64>> {
        if t == 0 {
            return Err(Error::param("trial", "trials count from 1"));
        }
        self.slices
            .iter()
            .map(|(pair, values)| {
                values
                    .get(t - 1)
                    .map(|&x| (*pair, x))
                    .ok_or_else(|| Error::Data(format!("pair {pair} has no trial {t}")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn obs(user: u32, item: u32, trial: u32, rating: f64) -> Observation {
        Observation { user, item, trial, rating }
    }

    #[test]
    fn builds_slices_and_dims() {
        let t = RatingTensor::from_observations(
            [obs(1, 1, 2, 4.0), obs(1, 1, 1, 3.0), obs(2, 1, 1, 5.0), obs(1, 2, 1, 1.0)],
            Some(Scale::likert5()),
        )
        .unwrap();
        assert_eq!(t.slice(PairIndex::new(1, 1)).unwrap(), &[3.0, 4.0]);
        assert_eq!(t.dims(), (2, 2, 2));
        assert_eq!(t.observation_count(), 4);
        assert_eq!(t.observations().count(), 4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RatingTensor::from_observations([], None).is_err());
        let dup = [obs(1, 1, 1, 3.0), obs(1, 1, 1, 4.0)];
        assert!(RatingTensor::from_observations(dup, None).is_err());
        let gap = [obs(1, 1, 1, 3.0), obs(1, 1, 3, 4.0)];
        assert!(RatingTensor::from_observations(gap, None).is_err());
        let off = [obs(1, 1, 1, 6.0)];
        assert!(RatingTensor::from_observations(off, Some(Scale::likert5())).is_err());
    }

    #[test]
    fn estimates_follow_bessel() {
        let mut slices = BTreeMap::new();
        slices.insert(PairIndex::new(1, 1), vec![4.0; 5]);
        slices.insert(PairIndex::new(1, 2), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        slices.insert(PairIndex::new(1, 3), vec![2.0]);
        let t = RatingTensor::from_slices(slices, None).unwrap();
        let est = t.estimate_parameters();
        let a = est[&PairIndex::new(1, 1)];
        assert_eq!((a.mean, a.sd), (4.0, Some(0.0)));
        let b = est[&PairIndex::new(1, 2)];
        assert_eq!(b.mean, 3.0);
        assert!((b.sd.unwrap() - 1.5811388300841898).abs() < 1e-12);
        assert_eq!(est[&PairIndex::new(1, 3)].sd, None);
    }

    #[test]
    fn snap_rounds_and_clamps() {
        let s = Scale::likert5();
        assert_eq!(s.snap(2.4), 2.0);
        assert_eq!(s.snap(-3.0), 1.0);
        assert_eq!(s.snap(7.2), 5.0);
    }
}

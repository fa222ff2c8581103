//! Reproducible random streams.
//!
//! A [`RandomSeed`] names one logical stream: ChaCha8 keyed by `root`, with
//! `stream` as the ChaCha stream id. Monte-Carlo trial `j` reads its numbers
//! starting at word offset `j · 2³²` of that stream, so any partitioning of
//! trials across workers reproduces the same values bit for bit.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dist::GaussianParams;
use crate::{Error, Result};

/// Words reserved for each trial inside a stream.
const TRIAL_STRIDE_BITS: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomSeed {
    pub root: u64,
    pub stream: u64,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomSeed {
    pub const fn new(root: u64) -> Self {
        Self { root, stream: 0 }
    }

    pub const fn with_stream(root: u64, stream: u64) -> Self {
        Self { root, stream }
    }

    /// A child stream; distinct labels give (practically) disjoint streams.
    pub fn derive(self, label: u64) -> Self {
        Self {
            root: self.root,
            stream: mix(self.stream ^ mix(label.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }

    /// Generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root);
        rng.set_stream(self.stream);
        rng
    }

    pub fn trial_streams(&self) -> TrialStreams {
        TrialStreams { rng: self.rng() }
    }
}

/// Random access to per-trial sub-streams of one seed.
pub struct TrialStreams {
    rng: ChaCha8Rng,
}

impl TrialStreams {
    pub fn at(&mut self, trial: u64) -> &mut ChaCha8Rng {
        self.rng.set_word_pos(u128::from(trial) << TRIAL_STRIDE_BITS);
        &mut self.rng
    }
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `count` draws from `N(μ, σ)`; a constant sequence of `μ` when `σ = 0`.
pub fn sample_gaussian(params: GaussianParams, count: usize, seed: RandomSeed) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    if params.is_degenerate() {
        return Ok(alloc::vec![params.mu; count]);
    }
    let mut rng = seed.rng();
    Ok((0..count)
        .map(|_| params.mu + params.sigma * standard_normal(&mut rng))
        .collect())
}

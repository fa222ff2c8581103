//! Rayon-backed [`Executor`].

use hue_core::Executor;
use rayon::prelude::*;
use rayon::ThreadPool;

/// Trials per task; small enough to balance, large enough to amortize.
const CHUNK: usize = 4096;

pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    /// `threads == 0` lets rayon pick.
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn fill(&self, out: &mut [f64], task: &(dyn Fn(usize, &mut [f64]) + Sync)) {
        if self.pool.current_num_threads() == 1 || out.len() <= CHUNK {
            task(0, out);
            return;
        }
        self.pool.install(|| {
            out.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(i, chunk)| task(i * CHUNK, chunk));
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hue_core::metric::{sample_metric, MetricKind, RatingDistributionSet};
    use hue_core::{RandomSeed, Sequential};

    #[test]
    fn matches_sequential() {
        let r = RatingDistributionSet::standard(7).unwrap();
        let p = r.mean_predictor("p");
        let seq = sample_metric(&r, &p, MetricKind::Rmse, 20_000, RandomSeed::new(1), &Sequential).unwrap();
        let par = sample_metric(&r, &p, MetricKind::Rmse, 20_000, RandomSeed::new(1), &RayonExecutor::new(4).unwrap())
            .unwrap();
        assert_eq!(seq.values, par.values);
    }
}

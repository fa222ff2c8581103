//! Trial execution strategy.
//!
//! Samplers describe work as "fill this output slice, starting at trial
//! index `offset`". An executor decides how the slice is split; since every
//! trial draws from its own sub-stream, the split never changes the values.

pub trait Executor: Sync {
    /// Call `task(offset, chunk)` for disjoint chunks covering `out`, where
    /// `offset` is the index of `chunk[0]` within `out`.
    fn fill(&self, out: &mut [f64], task: &(dyn Fn(usize, &mut [f64]) + Sync));
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn fill(&self, out: &mut [f64], task: &(dyn Fn(usize, &mut [f64]) + Sync)) {
        task(0, out);
    }
}

/// Splits into fixed-size chunks, still on one thread. Useful for checking
/// that results do not depend on chunking.
#[derive(Debug, Clone, Copy)]
pub struct Chunked(pub usize);

impl Executor for Chunked {
    fn fill(&self, out: &mut [f64], task: &(dyn Fn(usize, &mut [f64]) + Sync)) {
        let size = self.0.max(1);
        for (i, chunk) in out.chunks_mut(size).enumerate() {
            task(i * size, chunk);
        }
    }
}

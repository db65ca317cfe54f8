//! Pluggable executors for embarrassingly parallel work.
//!
//! Work is always split into a fixed number of indexed units whose results
//! are combined in index order, so the output of every estimator is the same
//! whichever executor runs it.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(0), ..., f(count - 1)` and returns the results in index
    /// order.
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every unit on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}

/// Samples per work unit for batched Monte Carlo.
pub const BATCH: u64 = 4096;

/// `(batch index, batch size)` pairs covering `total` samples.
pub fn batches(total: u64) -> Vec<(u64, u64)> {
    let full = total / BATCH;
    let rem = total % BATCH;
    let mut out: Vec<(u64, u64)> = (0..full).map(|b| (b, BATCH)).collect();
    if rem > 0 {
        out.push((full, rem));
    }
    out
}

//! Deterministic parallel map over trajectories.

use anyhow::Result;
use rayon::prelude::*;

/// Trajectories per work unit; fixed so that reductions do not depend on
/// the worker count.
pub const CHUNK: usize = 32;

/// `f(i)` for `i < count` on `threads` workers, returned in index order.
pub fn par_map<T, F>(count: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

/// Splits `0..count` into consecutive ranges of [`CHUNK`] and maps each.
pub fn par_chunks<T, F>(count: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> Result<T> + Sync + Send,
{
    let chunks = count.div_ceil(CHUNK);
    par_map(chunks, threads, |c| f(c * CHUNK..((c + 1) * CHUNK).min(count)))
}

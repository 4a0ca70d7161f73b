//! Replicate-level parallelism with index-ordered results.
//!
//! Replicate `r` always draws from streams keyed by `r`, and results are
//! collected in index order, so output does not depend on the thread count.

use rayon::prelude::*;

use crate::error::Result;

/// `f(0), ..., f(m-1)` evaluated in parallel, returned in index order.
pub fn map_replicates<T, F>(m: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..m).into_par_iter().map(f).collect()
}

/// Fallible variant; stops at the first error encountered.
pub fn try_map_replicates<T, F>(m: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..m).into_par_iter().map(f).collect()
}

/// Run `f` inside a pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> std::result::Result<T, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

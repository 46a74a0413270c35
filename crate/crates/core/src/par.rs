//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over the rayon
//! global pool. Without it, [`Execution::Parallel`] silently runs
//! sequentially so configs stay portable across builds.
//!
//! Every helper returns results in index order, and floating-point folds are
//! always performed in that order, so output never depends on scheduling.

use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Splits `0..n` into fixed-size chunks, folds each chunk sequentially with
/// `fold`, and returns the per-chunk accumulators in chunk order.
///
/// The chunk size is fixed independently of the thread count, so the caller
/// can merge the accumulators in order and get bit-identical results for any
/// degree of parallelism.
pub fn fold_chunks<A, I, F>(exec: Execution, n: usize, chunk: usize, init: I, fold: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, usize) + Sync + Send,
{
    let chunk = chunk.max(1);
    let chunks = n.div_ceil(chunk);
    map_indexed(exec, chunks, |c| {
        let mut acc = init();
        let start = c * chunk;
        for i in start..(start + chunk).min(n) {
            fold(&mut acc, i);
        }
        acc
    })
}

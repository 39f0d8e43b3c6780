//! Thin switch between rayon and plain iteration.
//!
//! Every helper here must produce output that is independent of thread
//! count and work splitting: results are collected in index order and
//! reductions are over exact integer sums.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sizes the process-wide worker pool; call before any parallel work.
///
/// Sequential builds accept and ignore the request. A second call in the
/// same process fails, because the pool is already running.
pub fn configure_threads(threads: usize) -> crate::error::Result<()> {
    if threads == 0 {
        return Err(crate::error::Error::invalid("thread count must be positive"));
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| crate::error::Error::invalid(format!("worker pool: {e}")))
    }
    #[cfg(not(feature = "parallel"))]
    Ok(())
}

/// Applies `f` to `0..n` and collects the results in index order.
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sums `f(i)` over `0..n`.
pub(crate) fn sum_indices<F>(n: usize, f: F) -> u64
where
    F: Fn(usize) -> u64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).sum()
    }
}

/// Folds per-index contributions into a vector of `m` counters.
///
/// `f` adds index `i`'s contribution to the accumulator it is handed.
pub(crate) fn fold_counts<F>(n: usize, m: usize, f: F) -> Vec<u64>
where
    F: Fn(&mut [u64], usize) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n)
            .into_par_iter()
            .fold(
                || vec![0u64; m],
                |mut acc, i| {
                    f(&mut acc, i);
                    acc
                },
            )
            .reduce(
                || vec![0u64; m],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(&b) {
                        *x += *y;
                    }
                    a
                },
            )
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut acc = vec![0u64; m];
        for i in 0..n {
            f(&mut acc, i);
        }
        acc
    }
}

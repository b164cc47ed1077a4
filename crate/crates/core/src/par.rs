//! Data-parallel helpers.
//!
//! With the `parallel` feature the maps run on the rayon pool; without it
//! they run sequentially. Output order, and therefore every reduction built
//! on top, is identical in both modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Map `f` over `items`, preserving order.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map `f` over `0..n`, preserving order.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
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

/// Sum `f(i)` over `0..n` in fixed-size blocks, adding block totals in index
/// order so the result does not depend on scheduling.
pub fn block_sum<F>(n: usize, block: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let block = block.max(1);
    let nblocks = n.div_ceil(block);
    map_range(nblocks, |b| {
        let lo = b * block;
        let hi = (lo + block).min(n);
        (lo..hi).map(&f).sum::<f64>()
    })
    .into_iter()
    .sum()
}

/// Size the global worker pool. Only the first call has an effect; without
/// the `parallel` feature this does nothing.
pub fn set_threads(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("thread count must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
        log::warn!("worker pool already initialized: {e}");
    }
    Ok(())
}

/// Run `f` with every map inside it on a single worker.
pub fn sequential<R: Send, F: FnOnce() -> R + Send>(f: F) -> R {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(1).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}

/// Whether the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v: Vec<usize> = (0..100).collect();
        assert_eq!(map(&v, |x| x * 2), (0..100).map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn block_sum_is_exact_on_integers() {
        assert_eq!(block_sum(1001, 64, |i| i as f64), 500_500.0);
    }

    #[test]
    fn sequential_scope_gives_same_sum() {
        let f = |i: usize| (i as f64).sqrt();
        assert_eq!(sequential(|| block_sum(5000, 7, f)), block_sum(5000, 7, f));
    }
}

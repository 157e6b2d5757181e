//! Data-parallel map used by searches and sweeps. With the `parallel`
//! feature the work is spread over the rayon pool; without it the same calls
//! run sequentially. Results keep input order either way, so outputs do not
//! depend on the feature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_par<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_par<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    map_seq(items, f)
}

/// Always sequential; the baseline the benches compare against.
pub fn map_seq<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Whether this build spreads work over threads.
pub const PARALLEL: bool = cfg!(feature = "parallel");

//! Deterministic mapping over sample points, parallel when the `parallel`
//! feature is enabled.
//!
//! Results always come back in input order, so downstream reductions see the
//! same sequence whichever execution mode ran, and reports stay byte-stable.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// True when this build can actually run the mapping on a thread pool.
pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// Map `f` over `items`, in input order. `sequential` forces the plain
/// single-threaded path even in parallel builds.
pub fn map_points<T, U, F>(items: &[T], sequential: bool, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    if sequential || !parallel_available() {
        return items.iter().map(f).collect();
    }
    #[cfg(feature = "parallel")]
    {
        return items.par_iter().map(f).collect();
    }
    #[cfg(not(feature = "parallel"))]
    unreachable!()
}

//! Data-parallel dispatch for independent work cells.
//!
//! With the `parallel` feature (default) the mapped closures run on the
//! rayon pool; without it everything runs sequentially.  Output order is
//! the input order either way, so results never depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over the items, in parallel when the feature is enabled.
pub fn map_cells<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Always-sequential variant, kept callable so benchmarks can compare the
/// two paths within one binary.
pub fn map_cells_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

//! Trial-level parallelism plumbing.
//!
//! Monte Carlo trials, dataset passes, and row loops are embarrassingly
//! parallel: every work item owns a distinct RNG stream, so results do not
//! depend on scheduling. With the `parallel` feature (default) the work is
//! spread over the rayon pool; without it, or with
//! [`Parallelism::Sequential`], the same closures run on one thread. Output
//! order is by item index either way, which keeps reports byte-stable.

/// Runtime selection of the execution backend.
///
/// `Auto` uses rayon when the `parallel` feature is compiled in. `Sequential`
/// forces the single-threaded path even then; the criterion benches use it to
/// compare both backends inside one binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum Parallelism {
    #[default]
    Auto,
    Sequential,
}

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        Parallelism::Auto => (0..n).into_par_iter().map(f).collect(),
        Parallelism::Sequential => (0..n).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, _mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, in parallel under `Auto`.
pub fn map_slice<'a, S, T, F>(items: &'a [S], mode: Parallelism, f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&'a S) -> T + Sync + Send,
{
    map_indexed(items.len(), mode, |i| f(&items[i]))
}

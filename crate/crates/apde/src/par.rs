//! Order-preserving data-parallel map.
//!
//! All per-sample fan-out (dataset generation, batch gradients, test-set
//! evaluation) goes through [`map_indexed`]. With the `parallel` feature the
//! work is spread over the rayon pool; without it the sequential
//! [`map_indexed_seq`] runs instead. Results are collected in index order
//! either way, and any reduction over them happens sequentially afterwards,
//! so outputs are bit-identical across thread counts and features.

/// Map `f` over `0..n`, preserving index order in the output.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, preserving index order in the output.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(n, f)
}

/// Sequential reference path; always available so benchmarks can compare.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Size the global worker pool (0 keeps the backend default). Call once,
/// before any parallel work; later calls fail harmlessly and are logged.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: usize) {
    if n == 0 {
        return;
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        log::warn!("thread pool already initialized, --threads ignored: {e}");
    }
}

/// Without the `parallel` feature there is no pool to size.
#[cfg(not(feature = "parallel"))]
pub fn configure_threads(n: usize) {
    if n > 1 {
        log::warn!("built without the parallel feature; --threads {n} has no effect");
    }
}

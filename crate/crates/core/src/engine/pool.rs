/// Maps `f` over `0..len` on up to `workers` threads, preserving order.
///
/// Callers must make `f(k)` depend only on `k`, which is what makes results
/// independent of the worker count.
pub fn parallel_map<T, F>(workers: usize, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if workers > 1 && len > 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(|| (0..len).into_par_iter().map(&f).collect());
        }
    }
    let _ = workers;
    (0..len).map(f).collect()
}

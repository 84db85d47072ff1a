//! Deterministic data-parallel helpers.
//!
//! Work is split into fixed-size chunks whose partial results are collected
//! in index order and then folded sequentially, so floating-point reductions
//! do not depend on thread scheduling.

use rayon::prelude::*;

/// Environment variable capping the size of the global thread pool.
pub const THREADS_ENV: &str = "PHLIM_THREADS";

/// Install the global rayon pool, honouring `PHLIM_THREADS` when set.
///
/// Calling this more than once is harmless; later calls are ignored.
pub fn init_thread_pool() {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let _ = builder.build_global();
}

/// Map `f` over `0..n` in chunks of `chunk` and return the per-chunk results
/// in order.
pub fn map_chunks<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| f(c * chunk..((c + 1) * chunk).min(n)))
        .collect()
}

/// Sum `f(i)` over `0..n` with a fixed reduction order.
pub fn ordered_sum<T, F>(n: usize, chunk: usize, f: F) -> T
where
    T: Send + Default + std::ops::Add<Output = T> + Copy,
    F: Fn(usize) -> T + Sync,
{
    map_chunks(n, chunk, |r| r.fold(T::default(), |acc, i| acc + f(i)))
        .into_iter()
        .fold(T::default(), |acc, x| acc + x)
}

/// Sum a fixed-size array of accumulators, e.g. `[norm, energy, px, py, pz]`.
pub fn ordered_sum_array<const N: usize, F>(n: usize, chunk: usize, f: F) -> [f64; N]
where
    F: Fn(usize) -> [f64; N] + Sync,
{
    let parts = map_chunks(n, chunk, |r| {
        let mut acc = [0.0; N];
        for i in r {
            let v = f(i);
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
        }
        acc
    });
    let mut out = [0.0; N];
    for p in parts {
        for (a, x) in out.iter_mut().zip(p) {
            *a += x;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_sum_is_reproducible() {
        let f = |i: usize| 1.0 / (1.0 + i as f64).powi(2);
        let a: f64 = ordered_sum(100_000, 977, f);
        let b: f64 = ordered_sum(100_000, 977, f);
        assert_eq!(a.to_bits(), b.to_bits());
        assert!((a - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-4);
    }

    #[test]
    fn array_sum_matches_scalar() {
        let s = ordered_sum_array::<2, _>(1000, 64, |i| [i as f64, 1.0]);
        assert_eq!(s, [499_500.0, 1000.0]);
    }
}

//! Deterministic chunked map-reduce.
//!
//! Trials are cut into fixed-size chunks whose boundaries never depend on the
//! worker count. Each chunk produces a partial result; partials are returned
//! in chunk order and folded sequentially by the caller. Floating-point sums
//! are therefore identical for one worker or many.

use std::ops::Range;
use std::sync::OnceLock;

use rayon::prelude::*;

/// Trials per chunk.
pub const CHUNK: u64 = 1 << 14;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "HOPFSIM_THREADS";

/// Worker count: `HOPFSIM_THREADS` when set to a positive integer, otherwise
/// the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let n = worker_count();
        if n <= 1 {
            return None;
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()
    })
    .as_ref()
}

/// Runs `f` on every chunk of `0..n` and returns the partials in chunk order.
pub fn map_chunks<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let chunks: Vec<Range<u64>> =
        (0..n.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(n)).collect();
    map_items(chunks, f)
}

/// Order-preserving parallel map over a list of work items.
pub fn map_items<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    match pool() {
        Some(pool) if items.len() > 1 => pool.install(|| items.into_par_iter().map(&f).collect()),
        _ => items.into_iter().map(f).collect(),
    }
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_range_in_order() {
        let parts = map_chunks(3 * CHUNK + 5, |r| (r.start, r.end));
        assert_eq!(parts.len(), 4);
        assert_eq!(parts[0], (0, CHUNK));
        assert_eq!(parts[3], (3 * CHUNK, 3 * CHUNK + 5));
        assert!(map_chunks(0, |r| r).is_empty());
    }

    #[test]
    fn compensated_sum_of_repeated_value_is_exact() {
        let c = -std::f64::consts::FRAC_1_SQRT_2;
        let mut s = CompensatedSum::default();
        for _ in 0..1_000_000 {
            s.add(c);
        }
        assert_eq!(s.value() / 1e6, c);
    }
}

//! Counter-based random streams and deterministic parallel reduction.
//!
//! Sample `i` of a stream always draws from ChaCha8 stream number `i` under
//! the stream's seed, so the value of any sample is a pure function of
//! `(seed, i)` and never depends on how samples are spread across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable that caps the worker count.
pub const THREADS_ENV: &str = "BORNSPACE_THREADS";

/// Samples per parallel work item. Fixed so that the reduction tree never
/// depends on the worker count.
pub const CHUNK: usize = 8192;

#[derive(Debug, Clone)]
pub struct SeededStream {
    seed: u64,
    base: ChaCha8Rng,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for sample `index`.
    pub fn substream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }

    /// First uniform `[0, 1)` draw of each of the substreams `0..n`.
    pub fn sample_stream(&self, n: usize) -> Vec<f64> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| self.substream(i).random::<f64>())
            .collect()
    }
}

/// Worker count requested through the environment, if any.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::schema(
                THREADS_ENV,
                format!("expected a positive integer, got `{raw}`"),
            )),
        },
    }
}

/// Runs `f` inside a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Parallel map over `0..n` in fixed chunks, combined left to right.
///
/// `map` turns a chunk range into a partial result and `combine` folds the
/// partials in chunk order, so the output is identical for any worker count
/// even when `combine` is not associative in floating point.
pub fn chunked_reduce<T, M, C>(n: usize, chunk: usize, map: M, init: T, mut combine: C) -> T
where
    T: Send,
    M: Fn(std::ops::Range<usize>) -> T + Sync,
    C: FnMut(T, T) -> T,
{
    let chunks = n.div_ceil(chunk.max(1));
    let partials: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| map(c * chunk..((c + 1) * chunk).min(n)))
        .collect();
    partials.into_iter().fold(init, &mut combine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let s = SeededStream::new(42);
        assert_eq!(s.sample_stream(100), SeededStream::new(42).sample_stream(100));
    }

    #[test]
    fn empty_request() {
        assert!(SeededStream::new(1).sample_stream(0).is_empty());
    }

    #[test]
    fn shipped_seed_golden_values() {
        // frozen from a first run; guards the counter layout against drift
        let a = SeededStream::new(20060117).sample_stream(3);
        let b = SeededStream::new(20060118).sample_stream(3);
        assert_ne!(a[0], b[0]);
        assert_eq!(a, SeededStream::new(20060117).sample_stream(3));
        let golden = golden_first_draws();
        assert_eq!(a[0].to_bits(), golden.0);
        assert_eq!(b[0].to_bits(), golden.1);
    }

    fn golden_first_draws() -> (u64, u64) {
        (GOLDEN_A, GOLDEN_B)
    }

    const GOLDEN_A: u64 = 4598898519116354796;
    const GOLDEN_B: u64 = 4598440698065974986;

    #[test]
    fn substreams_are_order_independent() {
        let s = SeededStream::new(9);
        let forward: Vec<f64> = (0..10).map(|i| s.substream(i).random()).collect();
        let backward: Vec<f64> = (0..10).rev().map(|i| s.substream(i).random()).collect();
        let mut backward = backward;
        backward.reverse();
        assert_eq!(forward, backward);
    }

    #[test]
    fn chunked_reduce_independent_of_workers() {
        let sum = |workers| {
            with_workers(workers, || {
                chunked_reduce(
                    100_003,
                    CHUNK,
                    |r| r.map(|i| (i as f64).sqrt().sin()).sum::<f64>(),
                    0.0,
                    |a, b| a + b,
                )
            })
            .unwrap()
        };
        assert_eq!(sum(1).to_bits(), sum(8).to_bits());
    }
}

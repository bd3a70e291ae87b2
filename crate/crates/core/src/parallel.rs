//! Chunked, counter-seeded parallel sampling.
//!
//! The index space `0..n` is cut into fixed-size chunks. Chunk `k` draws from
//! a ChaCha8 stream keyed by `(seed, k)`, so a chunk's random numbers do not
//! depend on which worker runs it or in what order. Results come back in
//! chunk order.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Samples per chunk.
pub const CHUNK_SIZE: u64 = 4096;

/// Environment variable consulted by front ends for a default worker count.
pub const WORKERS_ENV: &str = "EFFGEO_WORKERS";

/// The random stream for chunk `chunk` under `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Runs `f` over every chunk of `0..n` on `workers` threads (`0` means the
/// rayon default) and returns the per-chunk results in chunk order.
pub fn map_chunks<T, F>(n: u64, seed: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>, &mut ChaCha8Rng) -> T + Sync,
{
    let n_chunks = n.div_ceil(CHUNK_SIZE);
    let run = || {
        (0..n_chunks)
            .into_par_iter()
            .map(|k| {
                let start = k * CHUNK_SIZE;
                let mut rng = chunk_rng(seed, k);
                f(start..(start + CHUNK_SIZE).min(n), &mut rng)
            })
            .collect::<Vec<T>>()
    };
    if workers == 0 {
        return Ok(run());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(run))
}

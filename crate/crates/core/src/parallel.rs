//! Deterministic chunked parallelism: replicas are split into fixed-size chunks,
//! each chunk owns a ChaCha8 stream derived from the master seed and its index,
//! and results come back in chunk order regardless of the worker count.

use std::ops::Range;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const CHUNK: usize = 4096;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of chunk `index` under master seed `seed`.
pub fn chunk_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}

pub fn chunk_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(chunk_seed(seed, index))
}

/// Runs `f` on every chunk of `0..total` and returns the per-chunk results in order.
pub fn run_chunked<A, F>(total: usize, seed: u64, workers: Option<usize>, f: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(&mut ChaCha8Rng, Range<usize>) -> A + Sync + Send,
{
    let chunks: Vec<Range<usize>> = (0..total.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(total))
        .collect();
    let job = || -> Vec<A> {
        chunks
            .par_iter()
            .enumerate()
            .map(|(i, r)| {
                let mut rng = chunk_rng(seed, i as u64);
                f(&mut rng, r.clone())
            })
            .collect()
    };
    match workers {
        None | Some(0) => Ok(job()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

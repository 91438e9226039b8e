//! Chunked Monte Carlo with one ChaCha stream per chunk of sample indices.
//! Chunk statistics are merged in index order, so results do not depend on
//! the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;

/// Samples per random stream.
pub const CHUNK: u64 = 8192;

/// Running mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &Welford) -> Welford {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64);
        Welford { n, mean, m2 }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// The random stream for one chunk.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Statistics of `f(rng, i)` over sample indices `i < samples`.
pub fn mc_stats<F>(samples: u64, seed: u64, f: F) -> Result<Welford>
where
    F: Fn(&mut ChaCha8Rng, u64) -> Result<f64> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Result<Welford>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let start = c * CHUNK;
            let end = (start + CHUNK).min(samples);
            let mut w = Welford::default();
            for i in start..end {
                w.push(f(&mut rng, i)?);
            }
            Ok(w)
        })
        .collect();
    let mut total = Welford::default();
    for p in parts {
        total = total.merge(&p?);
    }
    Ok(total)
}

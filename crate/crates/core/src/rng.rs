//! Counter-based deterministic random streams.
//!
//! Every stochastic step in the phantom generator draws from a
//! [`CounterRng`], a splitmix-style generator whose state is a 64-bit
//! stream key plus a 64-bit counter. Streams are derived, never forked
//! implicitly: a stream is addressed by `(seed, purpose, indices...)`, e.g.
//! `(seed, "cells", layer, species)`, so per-layer or per-species work can
//! be evaluated in any order (or in parallel) and still reproduce the
//! sequential result bit for bit.

use alloc::vec::Vec;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a 64-bit hash; used for stream labels and catalog fingerprints.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Deterministic stream generator with explicit derivation.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    /// Root stream for a seed.
    pub fn new(seed: u64) -> Self {
        let key = mix64(seed ^ GAMMA);
        Self {
            key,
            counter: mix64(key ^ 0xD134_2543_DE82_EF95),
        }
    }

    /// Stream addressed by a purpose label and a list of indices.
    ///
    /// The address fully determines the sequence; the draw history of any
    /// other stream is irrelevant.
    pub fn stream(seed: u64, purpose: &str, indices: &[u64]) -> Self {
        let mut rng = Self::new(seed).derive(fnv1a64(purpose.as_bytes()));
        for &idx in indices {
            rng = rng.derive(idx);
        }
        rng
    }

    /// Derive an independent child stream identified by `label`.
    pub fn derive(&self, label: u64) -> Self {
        let key = mix64(self.key ^ mix64(label ^ 0x94D0_49BB_1331_11EB));
        Self {
            key,
            counter: mix64(key ^ 0xBF58_476D_1CE4_E5B9),
        }
    }

    /// Next raw sample.
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(GAMMA);
        mix64(self.key ^ self.counter)
    }

    /// Uniform sample in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Uniform sample in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Poisson-distributed count with mean `lambda`.
    ///
    /// Knuth's product method, applied in chunks of at most 500 so the
    /// running product never underflows; the sum of independent Poisson
    /// draws over the chunks has the exact target distribution.
    pub fn poisson(&mut self, lambda: f64) -> u64 {
        if !(lambda > 0.0) {
            return 0;
        }
        let mut remaining = lambda;
        let mut total = 0u64;
        while remaining > 0.0 {
            let chunk = if remaining > 500.0 { 500.0 } else { remaining };
            remaining -= chunk;
            let limit = exp_neg(chunk);
            let mut product = 1.0f64;
            loop {
                product *= self.next_f64();
                if product <= limit {
                    break;
                }
                total += 1;
            }
        }
        total
    }
}

fn exp_neg(x: f64) -> f64 {
    #[allow(unused_imports)]
    use num_traits::Float;
    (-x).exp()
}

/// Per-realization seed derived from a master seed.
pub fn derive_seed(master: u64, purpose: &str, index: u64) -> u64 {
    let mut rng = CounterRng::stream(master, purpose, &[index]);
    rng.next_u64()
}

/// Convenience: `n` seeds derived from a master seed.
pub fn derive_seeds(master: u64, purpose: &str, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| derive_seed(master, purpose, i)).collect()
}

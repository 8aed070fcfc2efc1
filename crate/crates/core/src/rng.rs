//! Deterministic random streams.
//!
//! Every random draw in the crate goes through [`StreamRng`], a ChaCha8
//! generator whose 256-bit key is the little-endian concatenation of four
//! `u64` words: `(seed, domain, a, b)`. Keying by `(domain, a, b)` gives each
//! consumer (an example's augmentation copy, an epoch's shuffle, a batch's
//! dropout masks) its own independent stream, so results do not depend on
//! the order in which work is scheduled.
//!
//! Integer draws are made on `u64` ranges and real draws use 53-bit `f64`
//! conversion, so sequences are identical on 32- and 64-bit targets.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream domains. The numeric values are part of the reproducibility
/// contract and must not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Augment = 1,
    Split = 2,
    Init = 3,
    Shuffle = 4,
    Dropout = 5,
    Test = 0xFFFF,
}

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        Self::keyed(seed, Domain::Test, 0, 0)
    }

    pub fn keyed(seed: u64, domain: Domain, a: u64, b: u64) -> Self {
        let mut key = [0u8; 32];
        for (chunk, word) in key.chunks_exact_mut(8).zip([seed, domain as u64, a, b]) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self {
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        self.inner.gen_range(0..n as u64) as usize
    }

    /// Uniform integer in the inclusive range `lo..=hi`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi);
        lo + self.below(hi - lo + 1)
    }

    /// Uniform real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            None
        } else {
            Some(&items[self.below(items.len())])
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

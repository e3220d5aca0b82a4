//! Seeded random stream shared by every simulator.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `seed_from_u64`. Its output is specified independently of platform,
//! pointer width and build mode, so a seed reproduces a run bit for bit.
//! Nothing in the crate reads OS entropy or thread-local generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[lo, hi)`. A degenerate range returns `lo`.
    pub fn uniform_real(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::param("uniform_real", "bounds must be finite"));
        }
        if lo > hi {
            return Err(Error::param(
                "uniform_real",
                format!("lo ({lo}) greater than hi ({hi})"),
            ));
        }
        if lo == hi {
            return Ok(lo);
        }
        Ok(self.inner.random_range(lo..hi))
    }

    /// Uniform draw in `[lo, hi]`, both ends inclusive.
    pub fn uniform_int(&mut self, lo: i64, hi: i64) -> Result<i64> {
        if lo > hi {
            return Err(Error::param("uniform_int", format!("lo ({lo}) greater than hi ({hi})")));
        }
        Ok(self.inner.random_range(lo..=hi))
    }

    /// Uniform index in `0..n`. Panics on `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() on empty range");
        self.inner.random_range(0..n)
    }

    /// True with probability `p`; `p` is clamped to `[0, 1]`.
    pub fn chance(&mut self, p: f64) -> bool {
        let u: f64 = self.inner.random();
        u < p.clamp(0.0, 1.0)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}

/// SplitMix64 finaliser, used to derive independent per-run seeds.
pub fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

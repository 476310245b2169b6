//! Seeded random streams.
//!
//! Simulation noise is drawn from a counter-based layout: every trajectory owns
//! its own ChaCha stream and every step starts at a fixed word offset inside
//! it. A draw is therefore a pure function of `(seed, trajectory, step)` and
//! does not depend on batch order or on how work is split between threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// 32-bit words reserved for a single step of one trajectory.
const WORDS_PER_STEP_LOG2: u32 = 24;

/// Sequential generator used for data generation, batching and dropout.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent seed from a parent seed and a label.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseKey {
    seed: u64,
    key: [u8; 32],
}

impl NoiseKey {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&derive_seed(seed, i as u64 + 1).to_le_bytes());
        }
        Self { seed, key }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator positioned at the start of `(trajectory, step)`.
    pub fn stream(&self, trajectory: u64, step: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(trajectory);
        rng.set_word_pos((step as u128) << WORDS_PER_STEP_LOG2);
        rng
    }

    /// Fill `out` with standard normal draws for `(trajectory, step)`.
    pub fn fill_normal(&self, trajectory: u64, step: u64, out: &mut [f64]) {
        let mut rng = self.stream(trajectory, step);
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }
}

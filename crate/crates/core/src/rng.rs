//! Seeding and random streams.
//!
//! Environment draws are addressed by `(round, slot)`: slot 0 carries the
//! per-round latent shared by every arm (a buyer's valuation, the competing
//! bid) and slot `1 + k` carries arm `k`'s private noise. Each address maps to
//! its own 256-byte ChaCha8 block, so what a policy pulls never shifts the
//! draws any other arm or round would see.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Words available per `(round, slot)` address, counted in `u64`.
pub const DRAWS_PER_ADDRESS: u32 = 32;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// One step of the splitmix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a sequence of words.
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6a09_e667_f3bc_c909, |h, &w| splitmix64(h ^ splitmix64(w)))
}

/// Seed of one sweep cell: `hash(master, policy, budget index, replication)`.
pub fn cell_seed(master: u64, policy: usize, budget_index: usize, replication: usize) -> u64 {
    hash_words(&[
        master,
        policy as u64,
        budget_index as u64,
        replication as u64,
    ])
}

#[inline]
fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Counter-addressed stream used by environments.
#[derive(Debug, Clone)]
pub struct StreamRng {
    rng: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(hash_words(&[seed, 0x0065_6e76])),
        }
    }

    /// Positions the generator at `(round, slot)`.
    pub fn at(&mut self, round: u64, slot: u64) -> Draws<'_> {
        self.rng.set_stream(slot);
        self.rng
            .set_word_pos(u128::from(round) * u128::from(2 * DRAWS_PER_ADDRESS));
        Draws {
            rng: &mut self.rng,
            left: DRAWS_PER_ADDRESS,
        }
    }
}

/// Sequential draws within one address.
#[derive(Debug)]
pub struct Draws<'a> {
    rng: &'a mut ChaCha8Rng,
    left: u32,
}

impl Draws<'_> {
    pub fn next_u64(&mut self) -> u64 {
        assert!(self.left > 0, "address exhausted");
        self.left -= 1;
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }
}

/// Sequential generator for the policy's own randomization.
#[derive(Debug, Clone)]
pub struct PolicyRng {
    rng: ChaCha8Rng,
}

impl PolicyRng {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(hash_words(&[seed, 0x0070_6f6c])),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        unit_f64(self.rng.next_u64())
    }

    /// Index drawn from nonnegative weights; `None` with probability
    /// `1 - sum(weights)` when the weights sum to less than one.
    pub fn categorical(&mut self, weights: &[f64]) -> Option<usize> {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            acc += w.max(0.0);
            if u < acc {
                return Some(i);
            }
        }
        None
    }
}

//! The single deterministic generator used throughout the crate.
//!
//! Every random draw (design matrices, noise, split permutations) comes from
//! ChaCha8 seeded with a 64-bit value through `SeedableRng::seed_from_u64`.
//! Equal seeds give bit-identical streams on every platform.

use rand::SeedableRng;

/// Generator type used for all sampling.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Seeds the crate generator.
pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

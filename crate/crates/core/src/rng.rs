//! Seeded, splittable random streams.
//!
//! Every random element in the crate is drawn from a ChaCha stream addressed
//! by an explicit `(seed, stream)` pair, so any cell of any experiment can be
//! regenerated in isolation and in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Well-known stream identifiers so that unrelated consumers of one seed never
/// share random numbers.
pub mod stream {
    pub const INITIAL_CONDITION: u64 = 1;
    pub const NETWORK: u64 = 2;
    pub const INPUT_WEIGHTS: u64 = 3;
    pub const SURROGATE: u64 = 4;
    pub const RESAMPLE: u64 = 5;
    pub const DATA_OFFSET: u64 = 6;
}

/// Generator for a given seed and stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent child seed (SplitMix64 finalizer over the pair).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

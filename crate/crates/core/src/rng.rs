//! Seeded randomness. Every sampling routine takes its generator explicitly;
//! parallel or per-round work derives independent seeds with [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The crate's deterministic generator.
pub type SimRng = ChaCha12Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Mixes a stream index into a master seed (SplitMix64 finalizer).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

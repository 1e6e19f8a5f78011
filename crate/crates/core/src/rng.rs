//! Deterministic random streams.
//!
//! Every stochastic step draws from a stream keyed by a tuple of integers
//! (seed, scenario, sample, epoch, ...), so results do not depend on the
//! order in which samples are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds an RNG stream from an ordered key.
pub fn stream(key: &[u64]) -> StreamRng {
    let mut state = 0x5EED_C5A1_2F0E_C7u64;
    for &k in key {
        state ^= k;
        state = splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Stable tags separating the purposes a stream is drawn for.
pub mod tag {
    pub const SCATTERERS: u64 = 1;
    pub const SAMPLE: u64 = 2;
    pub const AUGMENT: u64 = 3;
    pub const INIT: u64 = 4;
    pub const BATCH: u64 = 5;
    pub const HEAD: u64 = 6;
    pub const SUBSAMPLE: u64 = 7;
    pub const TEST_BATCH: u64 = 8;
}

//! Keyed random streams.
//!
//! Every random draw in a run comes from a ChaCha8 stream whose 256-bit seed
//! is derived from `(run seed, purpose, major index, minor index)` with
//! SplitMix64 mixing. A stream therefore depends only on its key, never on
//! how many draws other streams made or in which order they were consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Labels = 1,
    Encoder = 2,
    SampleLabel = 3,
    SampleNoise = 4,
    Corruption = 5,
    Perturbation = 6,
    FusionInit = 7,
    WildMix = 8,
    Probe = 9,
    ModalityGap = 10,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A 64-bit key for `(seed, purpose, major, minor)`; also used as the
/// recorded seed of per-item operations such as permutation plans.
pub fn derive_seed(seed: u64, purpose: Purpose, major: u64, minor: u64) -> u64 {
    let mut s = seed;
    let mut h = splitmix64(&mut s);
    for part in [purpose as u64, major, minor] {
        let mut t = h ^ part.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        h = splitmix64(&mut t);
    }
    h
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    let mut s = seed;
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

pub fn stream(seed: u64, purpose: Purpose, major: u64, minor: u64) -> ChaCha8Rng {
    rng_from_seed(derive_seed(seed, purpose, major, minor))
}

//! Seeded, splittable random streams.
//!
//! Every sampling routine takes an explicit `u64` seed. Independent work items
//! (replicas, point chunks, translation draws, symbols) get their own ChaCha
//! stream derived from `(seed, purpose, index)`, so results do not depend on
//! thread count or on the order in which items are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purposes keep streams for different consumers disjoint under one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Sequence = 1,
    Replica = 2,
    Translation = 3,
    CloudChunk = 4,
    Centers = 5,
    Draw = 6,
    EntropySample = 7,
}

/// Child seed for `(seed, purpose, index)`, mixed with SplitMix64.
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    let mut z = seed ^ (purpose as u64).wrapping_mul(0xA076_1D64_78BD_642F);
    z = splitmix64(z);
    z ^= index.wrapping_mul(0xE703_7ED1_A0B4_28DB);
    splitmix64(z)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, purpose, index))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

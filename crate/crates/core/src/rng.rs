//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! keyed by (base seed, purpose, two indices), so streams never overlap and
//! any single one can be reproduced in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Shuffle = 2,
    Select = 3,
    Partition = 4,
    Synth = 5,
    Subset = 6,
    Gradcheck = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, stream: Stream, a: u64, b: u64) -> u64 {
    let mut h = splitmix64(base);
    for part in [stream as u64, a, b] {
        h = splitmix64(h ^ part);
    }
    h
}

pub fn stream_rng(base: u64, stream: Stream, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream, a, b))
}

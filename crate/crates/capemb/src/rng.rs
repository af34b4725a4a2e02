//! Seeded, stream-addressable randomness.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! `(seed, stream)` pair. ChaCha is counter based, so a given pair yields the
//! same sequence on every platform, and child streams are derived by mixing
//! a tag into the parent stream id.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed { seed, stream: 0 }
    }

    /// Child stream addressed by an integer tag (copy index, vertex id, ...).
    pub fn derive(&self, tag: u64) -> Self {
        RngSeed {
            seed: self.seed,
            stream: splitmix64(self.stream.rotate_left(17) ^ splitmix64(tag)),
        }
    }

    /// Child stream addressed by a name.
    pub fn named(&self, name: &str) -> Self {
        self.derive(fnv1a(name))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded randomness. Every stochastic operation takes a [`RandomSource`]
//! explicitly; there is no ambient generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator type handed out by [`RandomSource::rng`].
pub type Rng = ChaCha8Rng;

/// An immutable seed from which independent, reproducible streams are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RandomSource {
    seed: u64,
}

impl RandomSource {
    pub const fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub const fn seed(&self) -> u64 {
        self.seed
    }

    /// A fresh generator positioned at the start of this seed's stream.
    pub fn rng(&self) -> Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// A child source whose stream is decorrelated from the parent and from
    /// siblings with other tags.
    pub fn derive(&self, tag: u64) -> Self {
        Self::new(splitmix64(
            self.seed ^ splitmix64(tag.wrapping_add(0x51_7c_c1_b7_27_22_0a_95)),
        ))
    }

    /// Child source keyed by a string label (e.g. a stage name).
    pub fn derive_named(&self, label: &str) -> Self {
        // FNV-1a keeps the label hash stable across platforms and releases.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        self.derive(h)
    }
}

impl From<u64> for RandomSource {
    fn from(seed: u64) -> Self {
        Self::new(seed)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

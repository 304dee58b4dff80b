//! Hierarchical, order-independent random streams.
//!
//! Every random draw in the crate comes from a [`StreamKey`] derived from a
//! root seed by a path of labels and indices, e.g.
//! `root(seed) / DATASET / 17 / X`. Two different paths give unrelated
//! ChaCha8 generators, so replications and bootstrap replicates can be
//! evaluated in any order, on any number of threads, with identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels used across the crate.
pub mod label {
    pub const X: u64 = 0x58;
    pub const C: u64 = 0x43;
    pub const REPLICATION: u64 = 0x5245_504c;
    pub const DATASET: u64 = 0x4441_5441;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const REPLICATE: u64 = 0x5245_5054;
    pub const ATTEMPT: u64 = 0x4154_5450;
    pub const SAMPLE: u64 = 0x5341_4d50;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        StreamKey(splitmix64(seed))
    }

    pub fn child(self, tag: u64) -> Self {
        StreamKey(splitmix64(self.0 ^ splitmix64(tag.wrapping_add(0x632b_e59b_d9b4_e019))))
    }

    /// Shorthand for `child(label).child(index)`.
    pub fn indexed(self, label: u64, index: u64) -> Self {
        self.child(label).child(index)
    }

    /// A 64-bit seed summarising this key, for handing to APIs that take a
    /// plain seed.
    pub fn seed(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

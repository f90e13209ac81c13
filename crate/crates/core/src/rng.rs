//! Named random sub-streams.
//!
//! Every random draw in the crate flows from a single user seed. Components
//! derive their own generator from `(seed, name)` so that, e.g., changing the
//! number of walks does not perturb the split.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const SPLIT: &str = "split";
pub const SAMPLING: &str = "sampling";
pub const INIT: &str = "init";
pub const WALKS: &str = "walks";
pub const SKIPGRAM: &str = "skipgram";
pub const LOUVAIN: &str = "louvain";
pub const SYNTH: &str = "synth";
pub const SHUFFLE: &str = "shuffle";

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed of the sub-stream `name` derived from `seed`.
pub fn stream_seed(seed: u64, name: &str) -> u64 {
    splitmix64(seed ^ splitmix64(fnv1a(name)))
}

/// Seed of the `index`-th member of a family of sub-streams.
pub fn indexed_seed(seed: u64, name: &str, index: u64) -> u64 {
    splitmix64(stream_seed(seed, name) ^ splitmix64(index.wrapping_add(1)))
}

pub fn stream(seed: u64, name: &str) -> Rng {
    Rng::seed_from_u64(stream_seed(seed, name))
}

pub fn indexed_stream(seed: u64, name: &str, index: u64) -> Rng {
    Rng::seed_from_u64(indexed_seed(seed, name, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        assert_eq!(stream(7, SPLIT).next_u64(), stream(7, SPLIT).next_u64());
        assert_ne!(stream(7, SPLIT).next_u64(), stream(7, WALKS).next_u64());
        assert_ne!(stream(7, SPLIT).next_u64(), stream(8, SPLIT).next_u64());
        assert_ne!(indexed_seed(7, WALKS, 0), indexed_seed(7, WALKS, 1));
    }
}

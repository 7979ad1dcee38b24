//! Seed derivation. Every stochastic step draws from its own ChaCha stream
//! keyed by the experiment seed plus a tag, so adding a step never shifts
//! the randomness of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}

pub fn stream(seed: u64, parts: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(seed, parts))
}

pub(crate) mod tag {
    pub const PAIRS: u64 = 1;
    pub const WALKS: u64 = 2;
    pub const SKIPGRAM: u64 = 3;
    pub const FOREST: u64 = 4;
    pub const FOLDS: u64 = 6;
    pub const INNER_SPLIT: u64 = 7;
    pub const EDGE_SPLIT: u64 = 8;
    pub const REMOVAL: u64 = 9;
    pub const SYNTH: u64 = 10;
    pub const LOCATION: u64 = 11;
    pub const NETWORK: u64 = 12;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, &[1, 2]).random();
        let b: u64 = stream(7, &[1, 2]).random();
        let c: u64 = stream(7, &[2, 1]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

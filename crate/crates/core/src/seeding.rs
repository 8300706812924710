//! Deterministic seed derivation.
//!
//! Every random draw in the crate flows from an explicit seed mixed with
//! fixed stream tags, so concurrent execution order can never change a
//! result. The mixer is SplitMix64, which is stable across platforms and
//! toolchain versions (unlike `DefaultHasher`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `base`, producing an independent child seed per
/// distinct part sequence.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut acc = splitmix64(base);
    for &part in parts {
        acc = splitmix64(acc ^ splitmix64(part));
    }
    acc
}

/// Seeded generator used throughout the crate.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_order_sensitive() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
        assert_ne!(derive_seed(7, &[]), derive_seed(7, &[0]));
    }
}

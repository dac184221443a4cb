//! Seeded random number generation.
//!
//! Every stochastic routine in the crate draws from [`ChaCha20Rng`], a
//! counter-based generator from `rand_chacha`. A `u64` seed fully determines
//! the stream, so a run is reproducible bit-for-bit within one build.

use rand::SeedableRng;
pub use rand_chacha::ChaCha20Rng as TailRng;

/// Build the crate's generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> TailRng {
    TailRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a sequence of words into one seed by chaining SplitMix64.
///
/// `mix_seed(&[a, b, c]) == splitmix64(splitmix64(splitmix64(a) ^ b) ^ c)`.
pub fn mix_seed(words: &[u64]) -> u64 {
    let mut iter = words.iter();
    let mut acc = match iter.next() {
        Some(&w) => splitmix64(w),
        None => return splitmix64(0),
    };
    for &w in iter {
        acc = splitmix64(acc ^ w);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 stream seeded with 0.
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(splitmix64(0x9e37_79b9_7f4a_7c15), 0x6e78_9e6a_a1b9_65f4);
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = rng_from_seed(9).random_iter().take(8).collect();
        let b: Vec<u64> = rng_from_seed(9).random_iter().take(8).collect();
        assert_eq!(a, b);
        let c: Vec<u64> = rng_from_seed(10).random_iter().take(8).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn mix_is_order_sensitive() {
        assert_ne!(mix_seed(&[1, 2, 3]), mix_seed(&[3, 2, 1]));
        assert_eq!(mix_seed(&[1, 2, 3]), mix_seed(&[1, 2, 3]));
    }
}

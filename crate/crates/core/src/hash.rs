//! Seeded 64-bit non-cryptographic hash used for OLH and bucket selection.
//!
//! The construction is two rounds of the SplitMix64 finalizer:
//! `h(seed, x) = mix(seed ^ mix(x + 0x2545F4914F6CDD1D))`. Independent
//! implementations must use exactly this function for OLH reports to decode.

use crate::rng::splitmix64;

pub fn hash_item(seed: u64, item: u32) -> u64 {
    splitmix64(seed ^ splitmix64((item as u64).wrapping_add(0x2545_f491_4f6c_dd1d)))
}

/// Hash of `item` reduced to `0..range`.
pub fn hash_to_range(seed: u64, item: u32, range: u32) -> u32 {
    debug_assert!(range > 0);
    // multiply-shift reduction
    (((hash_item(seed, item) >> 32) * range as u64) >> 32) as u32
}

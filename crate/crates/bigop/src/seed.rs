//! Seed derivation: one user-facing seed fans out into independent
//! per-component streams without correlation.

/// SplitMix64 finalizer; good avalanche behavior for cheap seed mixing.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent seed from a base seed and a salt.
pub(crate) fn derive(base: u64, salt: u64) -> u64 {
    splitmix64(base ^ splitmix64(salt))
}

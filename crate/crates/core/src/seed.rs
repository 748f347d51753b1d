//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from a root seed through [`mix`], so any
//! run is reproducible from its config and independent of thread scheduling.
//! Hash-map based hashing is deliberately avoided: it is randomized per
//! process and would break byte-identical reruns.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; full avalanche on 64 bits.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a salt.
pub fn mix(base: u64, salt: u64) -> u64 {
    splitmix64(base ^ splitmix64(salt))
}

/// Derive a child seed from a base seed and a path of salts.
pub fn mix_path(base: u64, salts: &[u64]) -> u64 {
    salts.iter().fold(base, |acc, &s| mix(acc, s))
}

/// The crate-wide deterministic RNG.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

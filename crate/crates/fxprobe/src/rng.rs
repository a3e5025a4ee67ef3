//! Deterministic splittable randomness.
//!
//! All randomness in the toolkit flows from a single 64-bit config seed.
//! Independent streams are derived by mixing `(seed, purpose, index)` into a
//! ChaCha8 key, so any module (or any parallel task) can obtain its own
//! generator without coordinating with the others, and results never depend
//! on scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over a byte string; platform-independent unlike `DefaultHasher`.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer; scrambles correlated inputs into distinct streams.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed for `(seed, purpose, index)`.
pub fn derive_seed(seed: u64, purpose: &str, index: u64) -> u64 {
    splitmix(seed ^ fnv1a(purpose.as_bytes()).rotate_left(1) ^ splitmix(index))
}

/// Derive an independent deterministic generator for `(seed, purpose, index)`.
pub fn derive_rng(seed: u64, purpose: &str, index: u64) -> ChaCha8Rng {
    let base = derive_seed(seed, purpose, index);
    let mut key = [0u8; 32];
    let mut z = base;
    for chunk in key.chunks_exact_mut(8) {
        z = splitmix(z);
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

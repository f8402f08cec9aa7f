//! Deterministic randomness plumbing.
//!
//! Every randomized routine in this crate takes an explicit `u64` seed and
//! draws from counter-mode ChaCha streams. Keyed draws (`keyed_u64`,
//! `keyed_bernoulli`) are pure functions of `(seed, key)`, so arc subsampling
//! is independent of iteration order and bit-identical across platforms.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer, used to fold purpose tags into seeds.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines a base seed with a purpose tag into a fresh seed.
pub fn derive(seed: u64, purpose: u64) -> u64 {
    mix(seed ^ mix(purpose))
}

/// Sequential generator for a (seed, purpose) pair.
pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

/// One uniform u64 keyed by (seed, key); independent of call order.
pub fn keyed_u64(seed: u64, key: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng.next_u64()
}

/// Bernoulli(p) draw keyed by (seed, key). Decided on the top 53 bits so the
/// outcome is an exact integer comparison, not a platform float quirk.
pub fn keyed_bernoulli(seed: u64, key: u64, p: f64) -> bool {
    let x = keyed_u64(seed, key) >> 11;
    (x as f64) < p * (1u64 << 53) as f64
}

//! Stable seed derivation for reproducible randomness.
//!
//! Every random decision in the toolkit (sampling, simulator noise routing,
//! unit picks) derives its RNG seed from a base seed plus string labels via
//! SHA-256, so outcomes depend only on inputs, never on scheduling order.

use sha2::{Digest, Sha256};

/// Derives a child seed from a base seed and an ordered list of labels.
///
/// The same `(base, labels)` always yields the same seed on every platform.
pub fn derive_seed(base: u64, labels: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    for label in labels {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has at least 8 bytes"))
}

/// Uniform f64 in [0, 1) derived from a seed, for one-shot probability draws.
pub fn unit_fraction(seed: u64) -> f64 {
    // 53 mantissa bits give a uniform dyadic fraction.
    (seed >> 11) as f64 / (1u64 << 53) as f64
}

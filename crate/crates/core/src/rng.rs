//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by
//! `(root seed, purpose, index)`. The key is hashed with SHA-256 so streams for
//! different purposes or indices are independent, and a stream never depends on
//! how many other streams were consumed before it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::field::Field;

pub type Stream = ChaCha8Rng;

/// Derive the 32-byte key for a named substream.
pub fn stream_key(root: u64, purpose: &str, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update((purpose.len() as u64).to_le_bytes());
    hasher.update(purpose.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    key
}

pub fn substream(root: u64, purpose: &str, index: u64) -> Stream {
    ChaCha8Rng::from_seed(stream_key(root, purpose, index))
}

/// Derive a child seed (for APIs that take a plain `u64`).
pub fn derive_seed(root: u64, purpose: &str, index: u64) -> u64 {
    let key = stream_key(root, purpose, index);
    u64::from_le_bytes(key[..8].try_into().expect("8 bytes"))
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_field(rng: &mut impl Rng, rows: usize, cols: usize) -> Field {
    Field::from_fn(rows, cols, |_, _| gaussian(rng))
}

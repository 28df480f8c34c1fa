//! Reproducible random streams.
//!
//! Every draw in a run comes from a ChaCha20 stream whose 256-bit key is
//! `SHA-256("povm-stream/v1" ‖ seed_le ‖ len(label)_le ‖ label ‖ index_le)`.
//! Streams for different `(label, index)` pairs are independent, so the
//! order in which checks or trials are evaluated never changes their draws.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha20Rng;

const DOMAIN: &[u8] = b"povm-stream/v1";

pub fn derive_stream(seed: u64, label: &str, index: u64) -> Stream {
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN);
    hasher.update(seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&hasher.finalize());
    ChaCha20Rng::from_seed(key)
}

//! Named child seeds.
//!
//! Every random stage draws from `derive_seed(parent, purpose)`, so adding a
//! stage never shifts the stream seen by another one, and per-room seeds do
//! not depend on processing order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// First eight bytes (little endian) of `SHA-256(parent_le ‖ purpose)`.
pub fn derive_seed(parent: u64, purpose: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(parent.to_le_bytes());
    h.update(purpose.as_bytes());
    let digest = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

pub fn rng_for(parent: u64, purpose: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(parent, purpose))
}

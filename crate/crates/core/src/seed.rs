//! Stable sub-seed derivation, so independent streams never depend on
//! iteration or thread scheduling order.

use sha2::{Digest, Sha256};

/// Mixes `seed` with labelled parts into a new 64-bit seed.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

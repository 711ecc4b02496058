//! Keyed random streams.
//!
//! Each stream is a ChaCha generator seeded from SHA-256 over the run seed
//! and a key, so the draws for one key never depend on how many other keys
//! were processed before it or on which worker processes it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn keyed_rng(seed: u64, key: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(keyed_digest(seed, key))
}

/// Stream for block `index` of a numbered sequence under `label`.
pub fn indexed_rng(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    keyed_rng(seed, &[label, &index.to_string()])
}

pub fn keyed_digest(seed: u64, key: &[&str]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in key {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hasher.finalize().into()
}

/// A deterministic 64-bit value for `key`, used for orderings and coin flips.
pub fn keyed_u64(seed: u64, key: &[&str]) -> u64 {
    let d = keyed_digest(seed, key);
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_keyed() {
        let a: u64 = keyed_rng(1, &["doc", "0"]).random();
        let b: u64 = keyed_rng(1, &["doc", "0"]).random();
        let c: u64 = keyed_rng(1, &["doc", "1"]).random();
        let d: u64 = keyed_rng(2, &["doc", "0"]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        // length prefixes keep ("ab","c") and ("a","bc") apart
        assert_ne!(keyed_u64(0, &["ab", "c"]), keyed_u64(0, &["a", "bc"]));
    }
}

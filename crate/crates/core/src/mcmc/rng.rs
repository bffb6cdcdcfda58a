//! Random number streams.
//!
//! Every chain draws from ChaCha8 seeded with a 64-bit seed and a stream
//! index, so chains sharing a seed stay independent. Replicate seeds of a
//! benchmark are the first eight bytes (little endian) of
//! `SHA-256(master_seed_le || scenario || replicate_le)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn derive_seed(master: u64, scenario: &str, replicate: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(scenario.as_bytes());
    h.update(replicate.to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_differ() {
        let a: u64 = chain_rng(7, 0).random();
        let b: u64 = chain_rng(7, 1).random();
        let c: u64 = chain_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let s = derive_seed(1, "ar1", 0);
        assert_eq!(s, derive_seed(1, "ar1", 0));
        assert_ne!(s, derive_seed(1, "ar1", 1));
        assert_ne!(s, derive_seed(1, "ma1", 0));
        assert_ne!(s, derive_seed(2, "ar1", 0));
        // Pinned value guards against silent changes of the derivation.
        let digest = Sha256::digest([1u64.to_le_bytes().as_slice(), b"ar1", &0u64.to_le_bytes()].concat());
        assert_eq!(s, u64::from_le_bytes(digest[..8].try_into().unwrap()));
    }
}

//! Seeded random streams.
//!
//! Every consumer draws from `ChaCha8Rng` seeded with the experiment seed and
//! switched to a stream derived from a `(purpose, index)` pair, so work split
//! across threads reproduces the single-threaded draws exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Stream identifier of `(purpose, index)`: the first 8 bytes of
/// `SHA-256(purpose ‖ 0x00 ‖ index_le)`.
pub fn stream_id(purpose: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(purpose.as_bytes());
    h.update([0u8]);
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

/// Independent generator for `(seed, purpose, index)`.
pub fn stream(seed: u64, purpose: &str, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(purpose, index));
    rng
}

/// Derives a child seed, e.g. one per grid cell or per repetition.
pub fn derive_seed(seed: u64, purpose: &str, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, purpose, index).next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let (mut a, mut b) = (stream(7, "x", 1), stream(7, "x", 1));
        for _ in 0..4 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(stream(7, "x", 1).next_u64(), stream(7, "x", 2).next_u64());
        assert_ne!(stream(7, "x", 1).next_u64(), stream(7, "y", 1).next_u64());
        assert_ne!(stream(7, "x", 1).next_u64(), stream(8, "x", 1).next_u64());
    }
}

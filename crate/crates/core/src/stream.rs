//! Reproducible random streams.
//!
//! Every trajectory draws from its own ChaCha8 stream, addressed by
//! `(seed, lane, index)`. The seed and lane form the key, the index selects
//! the 64-bit stream id. Output therefore depends only on these three numbers,
//! never on how replicas are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Lanes separate independent uses of the same replica index.
pub mod lane {
    pub const CHAIN_A: u64 = 0;
    pub const CHAIN_B: u64 = 1;
    pub const COUPLING: u64 = 2;
    pub const SAMPLES: u64 = 3;
    pub const PROCESS: u64 = 4;
}

pub fn stream(seed: u64, lane: u64, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&lane.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

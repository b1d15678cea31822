//! Deterministic random-stream derivation.
//!
//! Every concurrent task derives its own ChaCha8 stream from the master seed
//! and a tag path (replicate index, block index, purpose). Streams never
//! depend on scheduling, so outputs are identical for any worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for stream derivation.
pub mod tags {
    pub const DATA: u64 = 0x01;
    pub const PARTITION: u64 = 0x02;
    pub const VALIDIFY: u64 = 0x03;
    pub const REPLICATE: u64 = 0x04;
    pub const MERGE: u64 = 0x05;
    pub const ORACLE: u64 = 0x06;
    pub const JITTER: u64 = 0x07;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive an independent stream keyed by `(master, tags...)`.
pub fn derive(master: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = master ^ 0xD6E8FEB86659FD93;
    let _ = splitmix64(&mut state);
    for &t in path {
        state ^= t.wrapping_mul(0xA24BAED4963EE407);
        let _ = splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

//! Deterministic sub-stream derivation from a single master seed.
//!
//! Every random decision in a run is drawn from a stream keyed by
//! `(master seed, purpose, a, b)`, so outcomes are independent of
//! evaluation order and runs are bit-reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_TOPOLOGY: u64 = 0x01;
pub const STREAM_REQUESTS: u64 = 0x02;
pub const STREAM_ASSIGN: u64 = 0x03;
pub const STREAM_LINKS: u64 = 0x04;
pub const STREAM_FUSIONS: u64 = 0x05;
pub const STREAM_CALIBRATE: u64 = 0x06;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the sub-stream for `(master, purpose, a, b)`.
pub fn stream(master: u64, purpose: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    let mut state = splitmix(master);
    state = splitmix(state ^ purpose);
    state = splitmix(state ^ a);
    state = splitmix(state ^ b);
    for chunk in seed.chunks_mut(8) {
        state = splitmix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

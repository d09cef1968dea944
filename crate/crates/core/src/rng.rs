//! Keyed random streams for reproducible, order-independent replication.
//!
//! A stream is a ChaCha8 generator whose key comes from the master seed and
//! whose 64-bit stream id is a hash of a coordinate tuple such as
//! `(experiment tag, c index, replication index)`. Streams never overlap, so
//! replications can run on any number of workers in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a coordinate tuple into a stream id.
pub fn stream_id(coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// Generator state needed to reproduce a draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTrace {
    pub master: u64,
    pub stream: u64,
}

impl SeedTrace {
    pub fn new(master: u64, coords: &[u64]) -> Self {
        Self { master, stream: stream_id(coords) }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

pub fn stream_rng(master: u64, coords: &[u64]) -> StreamRng {
    SeedTrace::new(master, coords).rng()
}

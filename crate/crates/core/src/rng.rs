//! Counter-based random streams.
//!
//! A stream is a ChaCha8 keystream keyed by the 64-bit seed and selected by a
//! 64-bit stream id, so stream `i` of seed `s` is the same sequence no matter
//! which thread draws it or in what order the streams are consumed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SeededStream {
    inner: ChaCha8Rng,
}

/// Returns the stream identified by `(seed, stream_id)`.
pub fn seeded_stream(seed: u64, stream_id: u64) -> SeededStream {
    let mut inner = ChaCha8Rng::seed_from_u64(seed);
    inner.set_stream(stream_id);
    SeededStream { inner }
}

impl SeededStream {
    /// Uniform draw from `[0,1)` with 53 bits of precision.
    pub fn unit_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A point drawn uniformly from `[0,1)^dim`.
    pub fn unit_point(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.unit_f64()).collect()
    }
}

impl RngCore for SeededStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

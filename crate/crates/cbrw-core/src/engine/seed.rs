//! Reproducible stream seeding.
//!
//! Every random stream in the crate is a pure function of
//! `(master_seed, stream_index)`. Parallel harnesses give each trial its own
//! stream index, so results are independent of scheduling and thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct StreamSeed {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl StreamSeed {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            stream_index: 0,
        }
    }

    /// The same master seed on a different stream.
    pub fn stream(self, stream_index: u64) -> Self {
        Self {
            stream_index,
            ..self
        }
    }

    /// Materializes the stream. ChaCha8 supports 2^64 independent streams
    /// per key, which is exactly the (master, index) contract.
    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

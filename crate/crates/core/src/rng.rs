//! Splittable random streams.
//!
//! A stream is a `(seed, stream id)` pair mapped onto a ChaCha8 generator with
//! the ChaCha stream counter set to the id, so draws are identical on every
//! platform. Shots use `stream id = shot index`; independent evaluations get a
//! fresh seed through [`RngStream::fork`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    /// Generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Derives an independent stream family keyed by `label`.
    pub fn fork(&self, label: u64) -> Self {
        let key = splitmix64(self.seed ^ splitmix64(self.stream ^ splitmix64(label)));
        Self::new(key, 0)
    }

    /// Stream for shot `index` of the evaluation keyed by this stream's seed.
    pub fn shot(&self, index: u64) -> Self {
        Self::new(self.seed, index)
    }
}

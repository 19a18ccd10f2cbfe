//! Reproducible random streams.
//!
//! Every consumer derives its generator from a master seed and a stream
//! index, so work can be split across any number of workers without
//! changing the numbers each unit of work sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for `stream` under `seed`. Distinct streams never overlap.
pub fn child_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

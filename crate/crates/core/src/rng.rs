//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8, keyed by a 64-bit seed
//! and split into independent 64-bit stream ids. ChaCha output is stable
//! across `rand_chacha` releases, and a stream id lets each unit of work own
//! its generator so scheduling order cannot change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

//! Seeded random streams.
//!
//! Every random draw in the crate comes from an explicitly passed stream.
//! Independent streams for sessions, trials and sample chunks are derived
//! from a master seed by selecting a ChaCha stream id, so results do not
//! depend on the order or thread in which the streams are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Stream 0 of `seed`. Used for stand-alone sessions.
pub fn from_seed(seed: u64) -> SimRng {
    stream(seed, 0)
}

/// Independent stream `index` derived from `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

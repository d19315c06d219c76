//! The single seeded generator every randomized operation draws from.
//!
//! ChaCha8 is portable and its output is fixed by the seed alone, so split
//! partitions and synthetic data are reproducible byte-for-byte on any
//! platform. The identifier below is written into model files.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub const RNG_ALGORITHM: &str = "chacha8";

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for sub-task `stream` under the same seed.
pub fn seeded_stream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

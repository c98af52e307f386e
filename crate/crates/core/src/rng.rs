//! Counter-based random streams keyed by `(seed, stream id)`.
//!
//! A ChaCha8 generator seeded from `seed` with its 64-bit stream selector set
//! to the stream id. Distinct ids give independent, non-overlapping
//! sequences, so work can be split across threads without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RngStream = ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Packs a two-level key (e.g. experiment, chunk) into one stream id.
pub fn stream_id(major: u32, minor: u32) -> u64 {
    ((major as u64) << 32) | minor as u64
}

//! Seeded random streams.
//!
//! Every stochastic routine in the crate draws from a ChaCha8 stream keyed
//! by a user seed; independent substreams are derived with `set_stream`,
//! so chunked sampling gives identical results regardless of chunk
//! scheduling or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream `stream_id` of the generator keyed by `seed`.
pub fn substream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// The base stream for `seed`.
pub fn base(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

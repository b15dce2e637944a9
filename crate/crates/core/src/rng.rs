//! Seeded random streams.
//!
//! Every chain, replicate and mechanism update draws from its own ChaCha8
//! stream keyed by `(seed, stream)`, so results do not depend on execution
//! order.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

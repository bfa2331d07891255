//! Seed derivation for the deterministic generators.
//!
//! Every randomized stage gets its own ChaCha stream derived from the one
//! user-facing seed, so changing e.g. the number of sampled pairs never
//! perturbs weight initialization or batch order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tag; keeps independent sampling stages on disjoint streams.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Init = 1,
    Pairs = 2,
    Batches = 3,
    Queries = 4,
    Split = 5,
    Synthetic = 6,
}

/// Generator for `(seed, stream, index)`. `index` separates repeated uses of
/// the same stage, e.g. per-epoch batch shuffles.
pub(crate) fn seeded(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | (index & 0xffff_ffff));
    rng
}

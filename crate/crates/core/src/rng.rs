//! Reproducible per-replication random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator for replication `replication` of a run seeded with `seed`:
/// ChaCha8 keyed by `seed`, on stream number `replication`. Streams never
/// overlap, so replications are independent and individually reproducible.
pub fn substream(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

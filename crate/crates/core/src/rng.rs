//! Seed derivation for independent random streams.
//!
//! Every stochastic routine takes an explicit `Rng`; parallel drivers derive
//! one stream per work item from a base seed so that results do not depend
//! on scheduling or on the number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Namespace offsets so that per-topic and per-user streams never collide.
pub const TOPIC_NAMESPACE: u64 = 0;
pub const USER_NAMESPACE: u64 = 1 << 40;
pub const AUX_NAMESPACE: u64 = 1 << 41;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable hash of `(base_seed, index)`.
pub fn stream_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

/// Random stream number `index` under `base_seed`.
pub fn stream(base_seed: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(base_seed, index))
}

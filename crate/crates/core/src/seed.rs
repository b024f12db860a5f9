//! Named RNG sub-streams derived from one master seed.
//!
//! Every random consumer (initial sampling, mixture initialisation, the
//! random baseline) draws from its own stream so that changing how one of
//! them consumes randomness leaves the others untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const INIT_SAMPLE: &str = "init-sample";
pub const GMM_INIT: &str = "gmm-init";
pub const BASELINE: &str = "baseline";

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the sub-stream `name` under `master`.
pub fn derive(master: u64, name: &str) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(name.as_bytes())))
}

/// Portable, reproducible generator for a raw seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

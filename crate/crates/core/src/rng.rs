//! Deterministic random number streams.
//!
//! All randomness in the crate flows from a single user seed through named
//! substreams. A substream is addressed by a label (the stage that consumes
//! it, e.g. `"limit-draws"`) and an index (replicate number, attempt
//! counter). Substreams are independent ChaCha streams, so results do not
//! depend on evaluation order or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage labels used across the crate. Kept in one place so substreams
/// never collide by accident.
pub mod labels {
    pub const NU_DRAWS: &str = "nu-draws";
    pub const RHO_POINTS: &str = "rho-points";
    pub const LIMIT_DRAWS: &str = "limit-draws";
    pub const BOOT_REPLICATE: &str = "boot-replicate";
    pub const BOOT_MEAN: &str = "boot-mean";
    pub const BOOT_CVM: &str = "boot-cvm";
    pub const SIM_REPLICATE: &str = "sim-replicate";
    pub const SIM_PATHS: &str = "sim-paths";
    pub const SIM_MASKS: &str = "sim-masks";
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// A derived 64-bit seed for a nested stage, e.g. one simulation
/// replicate that runs a whole test pipeline with its own substreams.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix64(seed ^ fnv1a(label.as_bytes()).rotate_left(17) ^ splitmix64(index))
}

/// A ChaCha stream derived from `(seed, label, index)`.
///
/// The master seed keys the cipher; the (label, index) pair is mixed into
/// the 64-bit stream id, which selects a disjoint keystream.
pub fn substream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(splitmix64(fnv1a(label.as_bytes()) ^ splitmix64(index)));
    rng
}

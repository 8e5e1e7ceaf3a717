//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 seeded by a 64-bit seed,
//! with independent consumers separated by the ChaCha stream id.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the generator family, recorded in manifests.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64 + set_stream)";

/// Stream purposes. The high 32 bits of a stream id hold the purpose, the low
/// 32 bits an index (restart, replication, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    EmInit = 1,
    GaussianInit = 2,
    Replication = 3,
    LabelNoise = 4,
    Simulation = 5,
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | (index & 0xffff_ffff));
    rng
}

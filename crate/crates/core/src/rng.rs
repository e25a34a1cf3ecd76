//! Seeded random streams.
//!
//! Every trial derives one seed from the master seed and its coordinates;
//! world generation, sensing noise and planner sampling then draw from
//! separate ChaCha streams of that seed, so changing a planner never alters
//! the world or the noise it sees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    World = 1,
    Start = 2,
    Noise = 3,
    Planner = 4,
    Replay = 5,
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `master`, order-sensitive.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Generator for sub-task `index` of a parent seed, used where work may be
/// spread over threads but must not depend on scheduling.
pub fn substream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x1000 + index);
    rng
}

/// Index drawn with probability proportional to `weights`.
pub fn sample_weights(rng: &mut SimRng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, x) in weights.iter().enumerate() {
        u -= x;
        if u < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

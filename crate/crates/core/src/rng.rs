//! Seeded randomness.
//!
//! Every random choice in the engine draws from [`ChaCha8Rng`] seeded through
//! `SeedableRng::seed_from_u64`. ChaCha8 is a fixed, portable algorithm, so a
//! given seed yields the same stream on every platform. Distinct purposes
//! (initial model, shuffles, random selection, SVM epoch order) derive their
//! own streams from the run seed via [`stream`], which keeps them independent
//! of one another.

use rand::seq::SliceRandom;
use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Purpose tags used to derive independent streams from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Shuffle = 1,
    InitialModel = 2,
    Selection = 3,
    SvmEpochs = 4,
    SourcePass = 5,
    Subsample = 6,
    Synth = 7,
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for `purpose`, derived from `seed`. The two are mixed with a
/// SplitMix64 finalizer so nearby seeds give unrelated streams.
pub fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut z = seed
        .wrapping_add((purpose as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    seeded(z)
}

/// Fisher-Yates permutation of `0..n`.
pub fn permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

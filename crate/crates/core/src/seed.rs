//! Counter-based sub-seed derivation.
//!
//! Every random unit of work (a restart, a fold, a round, a generated game)
//! draws from its own generator seeded by mixing the run seed with a path of
//! integer labels. The mixing is SplitMix64's finalizer applied after each
//! label, so results depend only on the labels and never on the order in
//! which units execute.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a sub-seed from `seed` and a label path.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix(seed.wrapping_add(GOLDEN)), |acc, &label| {
            mix(acc ^ mix(label.wrapping_add(GOLDEN).wrapping_mul(GOLDEN)))
        })
}

/// Stable 64-bit label for a string (FNV-1a).
pub fn label(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn rng(seed: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(seed, path))
}

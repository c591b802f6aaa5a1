//! Deterministic seed derivation for replicated experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random generator used for every stochastic routine.
pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a root seed with a path of indices (cell, replicate, ...).
pub fn derive(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(root), |acc, &k| splitmix(acc ^ splitmix(k.wrapping_add(0xA076_1D64_78BD_642F))))
}

/// Generator seeded from `derive(root, path)`.
pub fn rng(root: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(root, path))
}

/// Hashes a label into a stable 64-bit value (FNV-1a).
pub fn label(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

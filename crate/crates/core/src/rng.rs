//! Seeded random streams split by label.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PlannerRng = ChaCha8Rng;

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// An independent stream derived from `seed` and a fixed label, so that
/// sub-computations do not perturb each other's draws.
pub fn labeled_rng(seed: u64, label: &str) -> PlannerRng {
    ChaCha8Rng::seed_from_u64(splitmix(seed) ^ fnv1a(label))
}

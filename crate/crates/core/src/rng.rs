//! Deterministic seeding.
//!
//! Every stochastic routine takes an explicit `u64` seed. Sub-tasks derive
//! their own seed from `(seed, task index)` so that results do not depend on
//! scheduling or on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for sub-task `task` of a computation seeded with `seed`.
pub fn derive_seed(seed: u64, task: u64) -> u64 {
    mix(seed ^ mix(task.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn task_rng(seed: u64, task: u64) -> Rng {
    rng(derive_seed(seed, task))
}

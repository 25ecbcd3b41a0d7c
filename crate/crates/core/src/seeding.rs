//! Deterministic per-task random streams.
//!
//! Every Monte Carlo sample, sweep point or trial draws from its own ChaCha
//! stream keyed by `(master seed, index, trial)`, so results do not depend
//! on how the work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

pub fn task_rng(master_seed: u64, index: u64, trial: u64) -> TaskRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index.wrapping_mul(0x1_0000_0000).wrapping_add(trial));
    rng
}

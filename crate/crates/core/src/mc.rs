//! Monte-Carlo trial plumbing shared by the simulations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// ChaCha stream `trial` of the root seed.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs `f(i, rng_i)` for every trial in parallel; results come back in
/// trial order, so any sequential fold over them is reproducible.
pub fn run_trials<T, F>(trials: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| f(i, &mut trial_rng(seed, i)))
        .collect()
}

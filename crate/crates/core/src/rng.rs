//! Deterministic per-trial random streams.
//!
//! Every trial draws from its own ChaCha8 stream keyed by the master seed, so
//! results do not depend on how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; each purpose gets an independent stream per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Positions = 0,
    Symbols = 1,
    Noise = 2,
}

/// Generator for `(trial, purpose)` under `master_seed`.
pub fn trial_rng(master_seed: u64, trial: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial * 256 + purpose as u64);
    rng
}

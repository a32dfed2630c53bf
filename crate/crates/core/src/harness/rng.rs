//! Per-trial random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the experiment seed, with the
//! 64-bit stream id packing the sweep index, trial index and purpose. Streams
//! never overlap and need no coordination between workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Channel,
    /// Receiver noise of the strategy with this index.
    Noise(u8),
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::Channel => 0,
            Purpose::Noise(i) => 1 + i as u64,
        }
    }
}

pub const MAX_SWEEP_POINTS: usize = 1 << 16;
pub const MAX_TRIALS: usize = 1 << 40;

/// Stream id layout: sweep (16 bits) | trial (40 bits) | purpose (8 bits).
pub fn stream_id(sweep: usize, trial: usize, purpose: Purpose) -> u64 {
    assert!(sweep < MAX_SWEEP_POINTS && trial < MAX_TRIALS, "stream index out of range");
    ((sweep as u64) << 48) | ((trial as u64) << 8) | purpose.code()
}

pub fn trial_rng(seed: u64, sweep: usize, trial: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(sweep, trial, purpose));
    rng
}

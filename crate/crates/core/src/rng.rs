//! Named random streams split from one master seed.
//!
//! Every consumer of randomness draws from its own ChaCha stream so that, for
//! example, changing the exploration schedule leaves the environment's
//! schedules and transitions untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Activity schedules and demand noise.
    Schedule = 1,
    /// Environment transitions (learner MDP sampling).
    Env = 2,
    /// Epsilon-greedy exploration.
    Explore = 3,
    /// Network parameter initialization.
    Init = 4,
    /// Daily state resets.
    Reset = 5,
}

pub fn stream(seed: u64, which: Stream) -> Rng {
    substream(seed, which, 0)
}

/// A stream further keyed by an index, e.g. one init stream per option network.
pub fn substream(seed: u64, which: Stream, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((which as u64) << 32) | index);
    rng
}

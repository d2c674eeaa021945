//! Exploration laboratory for state-novelty guided action persistence.
//!
//! The behavior policy of an off-policy learner repeats its previous action
//! with probability `alpha / max(1, sqrt(N(s)))`, where `N(s)` is a
//! pseudo-count of the current state obtained by hashing states into binary
//! codes. Around that core the crate provides:
//!
//! - [`env`]: seeded desk-scale environments (51x51 mini-grid, sparse-goal
//!   grid, chain, point-mass) behind one [`env::Environment`] contract.
//! - [`novelty`]: SimHash codes, pseudo-count tables and the ablation
//!   counters (exact, quantized, k-means).
//! - [`persistence`]: repeat-probability adaptor, zeta durations, fixed
//!   persistence, linear/sigmoid schedules and action-sequence counting.
//! - [`agents`]: replay buffer, n-step targets, tabular Q-learning, a small
//!   actor-critic with hand-written backprop, and the training loop.
//! - [`oracle`]: exact occupancy propagation and persistence-constrained
//!   dynamic programming used to check the simulator.
//! - [`harness`]: coverage experiments, metrics, traces, SVG figures,
//!   config files and the `snap` command line.

pub mod agents;
pub mod env;
pub mod error;
pub mod harness;
pub mod novelty;
pub mod oracle;
pub mod persistence;

pub use error::{Error, Result};

/// Deterministic RNG used across the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Seeds a fresh [`Rng`].
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a base seed and a stream tag.
///
/// SplitMix64 finalizer over the pair; used so that separate concerns
/// (environment, behavior, replay sampling) never share draws.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Deterministic, order-independent random streams.
//!
//! Every stochastic activity (milestone sampling, one edge trial, one
//! policy run) gets its own ChaCha8 stream derived from the user seed and
//! a tag list identifying the activity. Results therefore do not depend
//! on evaluation order, which keeps parallel and sequential runs and
//! repeated invocations bit-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domain tags. Distinct activities must use distinct domains so
/// that e.g. edge trial 3 and policy run 3 never share a stream.
pub mod domain {
    /// Free-space milestone sampling during roadmap construction.
    pub const MILESTONES: u64 = 0x4d49_4c45;
    /// Controller trials for a directed roadmap edge.
    pub const EDGE_TRIAL: u64 = 0x4544_4745;
    /// Policy execution runs.
    pub const POLICY_RUN: u64 = 0x5045_5845;
    /// MDP transition-estimation trials.
    pub const MDP_TRIAL: u64 = 0x4d44_5054;
    /// Start-region rejection sampling for MDP estimation.
    pub const MDP_START: u64 = 0x4d44_5353;
}

/// SplitMix64 finalizer; dispenses well-mixed words from a 64-bit state.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent ChaCha8 stream from `seed` and a tag list.
///
/// The tags are absorbed into a 64-bit state with SplitMix64 rounds and
/// the state is then expanded into the full 256-bit ChaCha key. Same
/// `(seed, tags)` always yields the same stream on every platform.
pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = mix(seed);
    for &t in tags {
        state = mix(state ^ mix(t));
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        state = mix(state.wrapping_add(i as u64 + 1));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

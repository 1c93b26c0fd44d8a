//! Deterministic stream derivation for all random draws in the crate.
//!
//! Streams come from the ChaCha8 counter-based generator.  A master seed and
//! a list of stream components (for example `[p, replicate]`) are mixed into
//! the 256-bit ChaCha key with SplitMix64, so distinct components yield
//! statistically independent streams while identical inputs reproduce the
//! same draws bit for bit on every platform.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step: advances the state and returns the next mixed output.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes stream components into the master seed (one SplitMix64 fold per
/// component), yielding a derived seed usable wherever a single `u64` is
/// expected — for example as the per-replicate seed of a sampler.
pub fn derive_seed(master_seed: u64, stream: &[u64]) -> u64 {
    let mut state = master_seed;
    for &component in stream {
        let mut c = component;
        state ^= splitmix64(&mut c);
        splitmix64(&mut state);
    }
    state
}

/// Builds the generator for `(master seed, stream components)`.
///
/// The key schedule is fixed: starting from the master seed, each component
/// is folded in with one SplitMix64 step, then four further steps expand the
/// state into the 32-byte ChaCha8 key.
pub fn derive_rng(master_seed: u64, stream: &[u64]) -> ChaCha8Rng {
    let mut state = derive_seed(master_seed, stream);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

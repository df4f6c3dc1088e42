//! Deterministic sub-seed derivation.
//!
//! All randomness in the crate flows from a single master seed through
//! [`derive_seed`]. A sub-seed is identified by a domain label plus integer
//! indices (for example `("noise", [level, trial])`), so independent pieces
//! of work own independent streams and results do not depend on scheduling
//! or iteration order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; the standard 64-bit finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed from `master` for the stream named by `domain` and
/// `indices`. The derivation folds each domain byte and index through
/// SplitMix64, so distinct labels yield statistically independent seeds.
pub fn derive_seed(master: u64, domain: &str, indices: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for byte in domain.bytes() {
        state = splitmix64(state ^ u64::from(byte));
    }
    for &index in indices {
        state = splitmix64(state ^ index);
    }
    state
}

/// Counter-based generator for one derived stream.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Deterministic seed derivation.
//!
//! Every stochastic routine takes a master seed plus a stream tag and an
//! index, and derives an independent ChaCha generator from the triple.
//! Workers never share generator state, so results are reproducible
//! bit-for-bit regardless of how work is partitioned across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keeping unrelated consumers of the same master seed apart.
pub mod streams {
    /// Training-set candidate sampling.
    pub const TRAINING: u64 = 0x01;
    /// Raw measurement shots.
    pub const SHOTS: u64 = 0x02;
    /// Quasi-probability sampling during mitigation.
    pub const MITIGATION: u64 = 0x03;
    /// Monte-Carlo design-data estimation.
    pub const DESIGN: u64 = 0x04;
    /// Product-form configuration sampling.
    pub const PRODUCT: u64 = 0x05;
    /// Haar-random computing gates.
    pub const HAAR: u64 = 0x06;
    /// Stabilizer-group element sampling.
    pub const GROUP: u64 = 0x07;
    /// Per-run bad-qubit draws of the temporally correlated model.
    pub const TEMPORAL: u64 = 0x08;
    /// Random bit-flip frames of balanced measurement.
    pub const BALANCED: u64 = 0x09;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `(master, stream, index)` into a single sub-seed.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut state = master;
    let a = splitmix64(&mut state);
    state ^= stream.wrapping_mul(0xd6e8_feb8_6659_fd93);
    let b = splitmix64(&mut state);
    state ^= index.wrapping_mul(0xa076_1d64_78bd_642f);
    let c = splitmix64(&mut state);
    a ^ b.rotate_left(17) ^ c.rotate_left(43)
}

/// Independent generator for `(master, stream, index)`.
pub fn rng_for(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

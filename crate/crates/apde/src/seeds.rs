//! Deterministic seed derivation.
//!
//! Every random draw in the pipeline gets its own ChaCha8 stream seeded by
//! mixing a base seed, a stream tag (what kind of draw), and an index
//! (which sample / epoch / step). Derivation is two SplitMix64 rounds, so
//! distinct indices under the same (base, stream) can never collide and the
//! result does not depend on execution order or thread count.

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix `(base, stream, index)` into an independent 64-bit seed.
#[inline]
pub fn derive(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(stream)).wrapping_add(index))
}

/// Stream tags. Keeping them in one place guarantees two call sites never
/// accidentally share a stream.
pub mod stream {
    /// Coefficient-field synthesis for dataset sample i.
    pub const PAIR: u64 = 0x01;
    /// Measurement mask for the coefficient field of sample i.
    pub const MASK_COEFF: u64 = 0x02;
    /// Measurement mask for the solution field of sample i.
    pub const MASK_SOL: u64 = 0x03;
    /// Per-(step, sample) training randomness: sub-masks, noise, flow time.
    pub const TRAIN: u64 = 0x04;
    /// Network parameter initialization.
    pub const INIT: u64 = 0x05;
    /// Sampling-time randomness: initial noise, inference sub-masks.
    pub const SAMPLE: u64 = 0x06;
    /// Gaussian-prior draws.
    pub const PRIOR: u64 = 0x07;
    /// Disjoint train/test splits derived from one user-facing seed.
    pub const SPLIT: u64 = 0x08;
}

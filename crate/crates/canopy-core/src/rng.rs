//! Deterministic pseudo-random streams.
//!
//! Seeded selection must not depend on evaluation order: decimation picks one
//! first return per grid cell from a stream derived from (seed, cell), and the
//! scan simulator derives one stream per pulse. `SplitMix64` plus the `mix`
//! helpers give cheap, well-distributed, platform-independent streams without
//! pulling in an RNG dependency.

/// SplitMix64 generator (Steele, Lea & Flood 2014). Passes BigCrush for the
/// stream lengths used here and recovers from any seed, including 0.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound) via 128-bit multiply-shift.
    #[inline]
    pub fn next_bounded(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        (((self.next_u64() as u128) * (bound as u128)) >> 64) as usize
    }

    /// Uniform double in [lo, hi).
    #[inline]
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

#[inline]
fn mix_step(state: u64, word: u64) -> u64 {
    // One splitmix finalization round per mixed word.
    let mut z = state.wrapping_add(word).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a stream seed from a master seed and one index.
#[inline]
pub fn mix2(seed: u64, a: u64) -> u64 {
    mix_step(seed, a)
}

/// Derive a stream seed from a master seed and two indices.
#[inline]
pub fn mix3(seed: u64, a: u64, b: u64) -> u64 {
    mix_step(mix_step(seed, a), b)
}

/// Derive a stream seed from a master seed and three indices.
#[inline]
pub fn mix4(seed: u64, a: u64, b: u64, c: u64) -> u64 {
    mix_step(mix_step(mix_step(seed, a), b), c)
}

/// FNV-1a over a string, for mixing identifiers into seeds.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for byte in s.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

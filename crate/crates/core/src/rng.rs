//! Seeded pseudo-random number generator used for weight initialization,
//! patch sampling, and synthetic corpus generation.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood): the state advances by
//! the odd constant `0x9E3779B97F4A7C15` and each output is the finalizer
//!
//! ```text
//! z  = state
//! z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
//! z ^= z >> 27; z *= 0x94D049BB133111EB
//! z ^= z >> 31
//! ```
//!
//! The algorithm is fixed here on purpose: every build, training run, and
//! corpus in this crate must be reproducible across platforms and across
//! independent implementations of the same file formats, so the PRNG cannot
//! be an unspecified library detail.

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in `[0, 1)` built from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`. `n` must be nonzero.
    ///
    /// Uses the widening-multiply trick; the bias for any `n` this crate
    /// uses (corpus sizes, pixel coordinates) is far below 2^-32.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        (((self.next_u64() as u128) * (n as u128)) >> 64) as usize
    }

    /// Derive an independent stream for a named sub-purpose.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut mix = SplitMix64::new(seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F));
        // Burn one output so adjacent stream ids decorrelate immediately.
        mix.next_u64();
        mix
    }
}

//! Seeded sampling for verification sweeps.
//!
//! All randomness in the crate (sandwich sweep points, identity-check
//! sample sets, mean-square gap estimates) flows through this one splitmix64
//! generator so that a report carrying its seed is exactly reproducible.
//! A full RNG dependency would buy nothing here: we need uniform and
//! log-uniform doubles, nothing else, and splitmix64's 64-bit state makes
//! the stream trivially stable across platforms.

/// splitmix64 (Steele–Lea–Flood mixing constants).
#[derive(Clone, Debug)]
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

    /// Uniform in [0, 1) with full 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [lo, hi).
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Log-uniform on [lo, hi): exp of a uniform draw on [ln lo, ln hi).
    #[inline]
    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo > 0.0 && hi > lo);
        (self.next_f64() * (hi.ln() - lo.ln()) + lo.ln()).exp()
    }
}

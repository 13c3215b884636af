//! SplitMix64, the only pseudo-random generator in the crate.
//!
//! The exact constants are part of the output format: reports and bin
//! assignments must be bit-reproducible across implementations.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 finalizer.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master_seed`.
#[inline]
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    mix(master_seed ^ index)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform double in [0,1) built from the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Draws an index from `cdf`, a nondecreasing cumulative table whose last
    /// entry is (approximately) 1.
    pub fn sample_cdf(&mut self, cdf: &[f64]) -> usize {
        let u = self.next_f64();
        let idx = cdf.partition_point(|&c| c <= u);
        // rounding in the last cdf entry can leave u above every bound
        idx.min(cdf.len() - 1)
    }
}

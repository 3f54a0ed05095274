//! Counter-based deterministic random numbers.
//!
//! All randomness in the crate flows through splitmix64 keyed by explicit
//! integers, so any value (a global shift, a checkerboard cell, a probe
//! point) is a pure function of its key. Re-running with the same seed
//! reproduces every draw bit for bit, independent of evaluation order.

#[derive(Clone, Copy, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Derive a stream from (seed, stream-id) so distinct purposes never share draws.
    pub fn keyed(seed: u64, stream: u64) -> Self {
        let mut s = SplitMix64::new(seed ^ stream.wrapping_mul(0x9e3779b97f4a7c15));
        s.next_u64();
        s
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Stateless uniform draw for a lattice cell, keyed by (seed, cell index).
/// Used by the checkerboard field so cells can be evaluated lazily in any order.
pub fn cell_uniform(seed: u64, ix: i64, iy: i64) -> f64 {
    let k = (seed ^ 0x6a09e667f3bcc909)
        .wrapping_add((ix as u64).wrapping_mul(0xff51afd7ed558ccd))
        .wrapping_add((iy as u64).wrapping_mul(0xc4ceb9fe1a85ec53));
    SplitMix64::keyed(k, 1).next_f64()
}

//! Deterministic random number generation.
//!
//! Codebook-based noise cancellation only works if the transmitter and the
//! receiver regenerate the exact same noise sequence from a shared 64-bit
//! seed, so this module pins the full generator stack: SplitMix64 for seed
//! expansion and stream derivation, xoshiro256** for the uniform stream, and
//! Box-Muller for Gaussians. Every draw consumes a fixed number of generator
//! outputs (one `u64` per uniform, two per Gaussian pair), which makes
//! skip-ahead by counted regeneration well defined.

use num_complex::Complex64;

/// One SplitMix64 step: advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a salt (trial index, codebook
/// key, ...). Distinct salts give decorrelated child streams.
pub fn derive_seed(master: u64, salt: u64) -> u64 {
    let mut state = master ^ salt;
    splitmix64(&mut state)
}

/// Deterministic generator stream: 256-bit xoshiro256** state seeded through
/// SplitMix64 expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    state: [u64; 4],
}

impl RngStream {
    /// Identifies the pinned algorithm stack for serialized artifacts.
    pub const ALGORITHM: &'static str = "splitmix64/xoshiro256**/box-muller";

    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let mut state = [0u64; 4];
        for s in &mut state {
            *s = splitmix64(&mut sm);
        }
        // xoshiro must not start at the all-zero state; SplitMix64 expansion
        // of any seed cannot produce it, but guard anyway.
        if state == [0, 0, 0, 0] {
            state[0] = 0x9e37_79b9_7f4a_7c15;
        }
        RngStream { state }
    }

    /// Stream for (master seed, stream index) pairs; distinct indices give
    /// distinct streams.
    pub fn derive(master: u64, stream_index: u64) -> Self {
        Self::from_seed(derive_seed(master, stream_index))
    }

    /// xoshiro256** next output.
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1]; safe as a log argument.
    fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One Box-Muller transform: two independent N(0, 1) samples from exactly
    /// two generator outputs.
    pub fn next_gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_open01();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        (r * theta.cos(), r * theta.sin())
    }

    /// Circularly-symmetric complex Gaussian CN(0, 1): real and imaginary
    /// parts independent N(0, 1/2).
    pub fn next_cn01(&mut self) -> Complex64 {
        let (re, im) = self.next_gaussian_pair();
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// CN(0, variance) sample.
    pub fn next_cn(&mut self, variance: f64) -> Complex64 {
        self.next_cn01() * variance.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = RngStream::from_seed(0x1234_5678_9abc_def0);
        let mut b = RngStream::from_seed(0x1234_5678_9abc_def0);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let (x0, y0) = a.next_gaussian_pair();
        let (x1, y1) = b.next_gaussian_pair();
        assert_eq!(x0.to_bits(), x1.to_bits());
        assert_eq!(y0.to_bits(), y1.to_bits());
    }

    #[test]
    fn derived_streams_differ() {
        let mut a = RngStream::derive(7, 0);
        let mut b = RngStream::derive(7, 1);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn derive_seed_matches_splitmix_of_xor() {
        let mut state = 0xdead_beefu64 ^ 42;
        assert_eq!(derive_seed(0xdead_beef, 42), splitmix64(&mut state));
    }

    #[test]
    fn uniform_range() {
        let mut rng = RngStream::from_seed(3);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = RngStream::from_seed(11);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let (x, y) = rng.next_gaussian_pair();
            sum += x + y;
            sum_sq += x * x + y * y;
        }
        let mean = sum / (2 * n) as f64;
        let var = sum_sq / (2 * n) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn cn01_unit_second_moment() {
        let mut rng = RngStream::from_seed(17);
        let n = 100_000;
        let mean_sq: f64 = (0..n).map(|_| rng.next_cn01().norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean_sq - 1.0).abs() < 0.02, "E|z|^2 = {mean_sq}");
    }
}

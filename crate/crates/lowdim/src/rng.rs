//! Seeded random number generation.
//!
//! Everything in this crate that draws randomness takes either a [`Rng`] or a
//! `u64` seed; there is no wall-clock or OS entropy anywhere. Independent work
//! units (trials, restarts, chains) derive their own generator from
//! `(master seed, stream, index)` so that results do not depend on execution
//! order or thread count.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream of pseudo-random numbers (ChaCha8, seeded).
pub struct Rng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

/// One step of the SplitMix64 output function.
pub fn split_mix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and two stream coordinates,
/// SplitMix-style. Used as `derive_seed(master, k, trial)` and similar.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut state = master;
    let a = split_mix64(&mut state);
    state ^= stream.wrapping_mul(0xA076_1D64_78BD_642F);
    let b = split_mix64(&mut state);
    state ^= index.wrapping_mul(0xE703_7ED1_A0B4_28DB);
    let c = split_mix64(&mut state);
    a ^ b.rotate_left(17) ^ c
}

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        Rng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Generator for work unit `index` of stream `stream` under `master`.
    pub fn for_unit(master: u64, stream: u64, index: u64) -> Self {
        Self::from_seed(derive_seed(master, stream, index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) with 53 bits of precision.
    pub fn uniform01(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform01_open(&mut self) -> f64 {
        loop {
            let u = self.uniform01();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Rejection sampling keeps the draw exactly uniform.
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Standard normal draw (Box–Muller, with the second value cached).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform01_open();
        let u2 = self.uniform01();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Samples `count` distinct values from [0, n) uniformly, returned sorted.
    pub fn distinct_below(&mut self, n: usize, count: usize) -> Vec<usize> {
        debug_assert!(count <= n);
        // Floyd's algorithm: uniform over subsets, O(count) memory.
        let mut chosen: Vec<usize> = Vec::with_capacity(count);
        for j in (n - count)..n {
            let t = self.below(j + 1);
            if chosen.contains(&t) {
                chosen.push(j);
            } else {
                chosen.push(t);
            }
        }
        chosen.sort_unstable();
        chosen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let mut a = Rng::from_seed(42);
        let mut b = Rng::from_seed(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derive_seed_separates_streams() {
        let s1 = derive_seed(7, 1, 0);
        let s2 = derive_seed(7, 2, 0);
        let s3 = derive_seed(7, 1, 1);
        assert_ne!(s1, s2);
        assert_ne!(s1, s3);
        assert_eq!(s1, derive_seed(7, 1, 0));
    }

    #[test]
    fn uniform01_in_range() {
        let mut rng = Rng::from_seed(1);
        for _ in 0..10_000 {
            let u = rng.uniform01();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn below_is_roughly_uniform() {
        let mut rng = Rng::from_seed(3);
        let mut counts = [0usize; 5];
        for _ in 0..50_000 {
            counts[rng.below(5)] += 1;
        }
        for &c in &counts {
            assert!((c as f64 - 10_000.0).abs() < 500.0, "counts {counts:?}");
        }
    }

    #[test]
    fn standard_normal_moments() {
        let mut rng = Rng::from_seed(9);
        let n = 100_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let z = rng.standard_normal();
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn distinct_below_gives_distinct_sorted() {
        let mut rng = Rng::from_seed(5);
        for _ in 0..1000 {
            let v = rng.distinct_below(9, 4);
            assert_eq!(v.len(), 4);
            for w in v.windows(2) {
                assert!(w[0] < w[1]);
            }
            assert!(v.iter().all(|&x| x < 9));
        }
    }
}

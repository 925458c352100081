//! Deterministic pseudo-random number generation.
//!
//! Every stochastic choice in the crate (weight init, pair sampling, data
//! order, degradation noise) draws from this generator, so a run is fully
//! determined by its seeds. The algorithm is SplitMix64 (Steele et al.,
//! "Fast splittable pseudorandom number generators"): a 64-bit counter
//! stream passed through a finalizing mix. It is stated by name in run
//! manifests so reimplementations can reproduce byte-identical streams.

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Derive an independent substream for a named purpose.
    ///
    /// Forking decouples consumers: adding draws to one stream does not
    /// shift any other.
    pub fn fork(&self, tag: u64) -> Rng {
        Rng {
            state: mix(self.state ^ tag.wrapping_mul(GAMMA).wrapping_add(0x1f83_d9ab_fb41_bd6b)),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). Rejection sampling keeps the
    /// distribution exact for every n.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Standard normal via Box-Muller. Two uniforms per call; the spare
    /// value is discarded to keep the stream position independent of call
    /// parity.
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        crate::math::sqrt(-2.0 * crate::math::ln(u1))
            * crate::math::cos(2.0 * core::f64::consts::PI * u2)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.below(i + 1);
            slice.swap(i, j);
        }
    }
}

/// Stateless hash of lattice coordinates, used by procedural textures.
#[inline]
pub fn hash2(seed: u64, x: i64, y: i64) -> u64 {
    mix(seed ^ (x as u64).wrapping_mul(0xd6e8_feb8_6659_fd93) ^ (y as u64).wrapping_mul(GAMMA))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn forks_are_independent_of_parent_draws() {
        let parent = Rng::new(7);
        let mut f1 = parent.fork(1);
        let mut parent2 = Rng::new(7);
        parent2.next_u64();
        let mut f1_again = Rng::new(7).fork(1);
        assert_eq!(f1.next_u64(), f1_again.next_u64());
        let _ = parent2;
    }

    #[test]
    fn below_covers_range_and_stays_in_bounds() {
        let mut rng = Rng::new(3);
        let mut seen = [false; 7];
        for _ in 0..500 {
            let v = rng.below(7);
            assert!(v < 7);
            seen[v] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn uniform_stays_in_interval() {
        let mut rng = Rng::new(11);
        for _ in 0..1000 {
            let v = rng.uniform(-2.0, 3.0);
            assert!((-2.0..3.0).contains(&v));
        }
    }
}

//! Deterministic SplitMix64 generator.
//!
//! Every random draw in the simulator (preference rows, activation flags,
//! initial queue order) goes through this type, so a 64-bit seed fully
//! determines an instance on every platform.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 state. Cloning forks the stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `[0, bound)` by rejection sampling.
    ///
    /// Draws are rejected when they fall in the final partial block of the
    /// 64-bit range, so every residue is equally likely.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a positive bound");
        // Largest multiple of `bound` that fits, expressed as a rejection threshold.
        let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % bound;
            }
        }
    }

    #[inline]
    pub fn below_usize(&mut self, bound: usize) -> usize {
        self.below(bound as u64) as usize
    }

    /// Uniform float in `[0, 1)` from the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `true` with probability `p`. Exact at the endpoints: `p <= 0` never
    /// fires and `p >= 1` always fires.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Fisher-Yates shuffle, walking from the high index downward.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below_usize(i + 1);
            items.swap(i, j);
        }
    }
}

/// Seed for one repetition of a sweep. Pure in `(master, rep_index)`.
pub fn derive_child_seed(master: u64, rep_index: u64) -> u64 {
    Rng::new(master ^ rep_index.wrapping_mul(GOLDEN_GAMMA)).next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen from an independent Python evaluation of the reference recurrence.
    const SEED0_STREAM: [u64; 3] = [0xE220_A839_7B1D_CDAF, 0x6E78_9E6A_A1B9_65F4, 0x06C4_5D18_8009_454F];

    #[test]
    fn seed_zero_matches_reference_stream() {
        let mut rng = Rng::new(0);
        for expected in SEED0_STREAM {
            assert_eq!(rng.next_u64(), expected);
        }
    }

    #[test]
    fn equal_seeds_equal_streams() {
        let mut a = Rng::new(0xDEAD_BEEF);
        let mut b = Rng::new(0xDEAD_BEEF);
        let xs: Vec<u64> = (0..1000).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..1000).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn unit_range_is_always_zero() {
        let mut rng = Rng::new(17);
        for _ in 0..100 {
            assert_eq!(rng.below(1), 0);
        }
    }

    #[test]
    fn child_seeds() {
        assert_eq!(derive_child_seed(5, 3), derive_child_seed(5, 3));
        assert_ne!(derive_child_seed(0, 0), derive_child_seed(0, 1));
        assert_eq!(derive_child_seed(0, 0), SEED0_STREAM[0]);
        assert_eq!(derive_child_seed(42, 7), 0xCBBD_05C7_DE73_A889);
    }

    #[test]
    fn bernoulli_endpoints_are_exact() {
        let mut rng = Rng::new(3);
        for _ in 0..1000 {
            assert!(!rng.bernoulli(0.0));
            assert!(rng.bernoulli(1.0));
        }
    }

    #[test]
    fn below_is_roughly_uniform() {
        let mut rng = Rng::new(99);
        let mut counts = [0u32; 6];
        for _ in 0..60_000 {
            counts[rng.below_usize(6)] += 1;
        }
        for c in counts {
            assert!((9_400..10_600).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = Rng::new(11);
        let mut v: Vec<usize> = (0..50).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}

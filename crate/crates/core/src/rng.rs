//! SplitMix64 with index-addressed substreams, so parallel sampling reproduces the
//! sequential draw exactly.

use crate::scalars::{Fe, FieldSpec};

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Independent stream number `index` derived from `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        SplitMix64 { state: mix(seed ^ mix(index.wrapping_add(1).wrapping_mul(GAMMA))) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in [0, n) by rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    pub fn fe(&mut self, f: &FieldSpec) -> Fe {
        Fe(self.below(f.order()) as u32)
    }

    pub fn nonzero_fe(&mut self, f: &FieldSpec) -> Fe {
        Fe(1 + self.below(f.order() - 1) as u32)
    }

    pub fn fe_vec(&mut self, f: &FieldSpec, n: usize) -> Vec<Fe> {
        (0..n).map(|_| self.fe(f)).collect()
    }

    /// Vector with each entry nonzero with probability `num/den`.
    pub fn sparse_fe_vec(&mut self, f: &FieldSpec, n: usize, num: u64, den: u64) -> Vec<Fe> {
        (0..n)
            .map(|_| if self.below(den) < num { self.nonzero_fe(f) } else { Fe::ZERO })
            .collect()
    }
}

//! Counter-based random numbers. Every draw is a pure function of
//! (seed, epoch, index, lane), so any event can be regenerated without replay.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const LANE_MUL: u64 = 0xD1B5_4A32_D192_ED03;
const EPOCH_MUL: u64 = 0xBF58_476D_1CE4_E5B9;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index` under a master seed.
pub fn replica_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master ^ GOLDEN).wrapping_add(index.wrapping_mul(LANE_MUL)))
}

/// Map 64 random bits to a uniform in the open interval (0, 1).
#[inline]
pub fn to_open_unit(w: u64) -> f64 {
    ((w >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, epoch: u64) -> Self {
        let k = mix64(seed.wrapping_add(GOLDEN));
        CounterRng {
            key: mix64(k ^ mix64(epoch.wrapping_mul(EPOCH_MUL).wrapping_add(GOLDEN))),
        }
    }

    #[inline]
    pub fn word(&self, index: u64, lane: u64) -> u64 {
        let c = index.wrapping_mul(4).wrapping_add(lane);
        mix64(mix64(self.key ^ c.wrapping_mul(LANE_MUL)).wrapping_add(self.key))
    }

    #[inline]
    pub fn uniform(&self, index: u64, lane: u64) -> f64 {
        to_open_unit(self.word(index, lane))
    }

    /// Uniform integer in `0..n`.
    #[inline]
    pub fn below(&self, index: u64, lane: u64, n: usize) -> usize {
        ((self.word(index, lane) as u128 * n as u128) >> 64) as usize
    }
}

/// Small sequential generator built on the same mixer, for bootstrap
/// resampling and other harness bookkeeping.
#[derive(Clone, Debug)]
pub struct SeqRng {
    rng: CounterRng,
    next: u64,
}

impl SeqRng {
    pub fn new(seed: u64) -> Self {
        SeqRng { rng: CounterRng::new(seed, u64::MAX), next: 0 }
    }

    pub fn uniform(&mut self) -> f64 {
        self.next += 1;
        self.rng.uniform(self.next, 0)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.next += 1;
        self.rng.below(self.next, 0, n)
    }
}

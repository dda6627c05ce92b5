//! Counter-based uniforms.
//!
//! Every replication owns a key derived from `(seed, replication)`; the
//! uniform for node `i` at step `t` is a SplitMix64 finalizer applied to the
//! key offset by the counter `t * n + i`. Any draw can be computed without
//! generating the ones before it, so samplers that only need a few nodes see
//! exactly the same randomness as full trajectories.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Map 64 random bits to the open interval `(0, 1)`.
#[inline]
pub fn to_unit(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// The random stream of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicationStream {
    key: u64,
    n: u64,
}

impl ReplicationStream {
    pub fn new(seed: u64, replication: u64, n: usize) -> Self {
        let key = mix64(mix64(seed ^ 0x5eed_5eed_5eed_5eed).wrapping_add(replication.wrapping_mul(GAMMA)));
        ReplicationStream { key, n: n as u64 }
    }

    /// Uniform for node `i` at step `t`.
    #[inline]
    pub fn uniform(&self, t: usize, i: usize) -> f64 {
        let counter = (t as u64).wrapping_mul(self.n).wrapping_add(i as u64).wrapping_add(1);
        to_unit(mix64(self.key.wrapping_add(counter.wrapping_mul(GAMMA))))
    }

    /// All `n` uniforms of step `t`, in node order.
    pub fn step_uniforms(&self, t: usize, out: &mut [f64]) {
        for (i, u) in out.iter_mut().enumerate() {
            *u = self.uniform(t, i);
        }
    }
}

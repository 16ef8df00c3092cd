//! Counter-based Gaussian increments: the normals of step `m` on path `p`
//! depend only on `(seed, p, m)`, and mode `k` always takes the `k`-th draw,
//! so resolutions with a common mode prefix share their increments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    pub seed: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn key(&self, path: u64, step: u64) -> u64 {
        splitmix64(splitmix64(splitmix64(self.seed) ^ path) ^ step.rotate_left(32))
    }

    /// Generator for an arbitrary `(path, step)` cell.
    pub fn rng(&self, path: u64, step: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key(path, step))
    }

    /// Standard normals for every retained mode at one step.
    pub fn fill(&self, path: u64, step: u64, out: &mut [f64]) {
        let mut rng = self.rng(path, step);
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }
}
